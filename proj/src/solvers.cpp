#include "mamesh/solvers.hpp"

#include "mamesh/errors.hpp"
#include "mamesh/fvops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mamesh {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::fp: return "fp";
        case Algorithm::afp: return "afp";
        case Algorithm::newton: return "newton";
        case Algorithm::pma: return "pma";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "fp") return Algorithm::fp;
    if (s == "afp") return Algorithm::afp;
    if (s == "newton") return Algorithm::newton;
    if (s == "pma") return Algorithm::pma;
    throw ConfigError("unknown algorithm '" + s + "' (expected fp, afp, newton or pma)");
}

void SolverConfig::validate() const {
    if (algorithm == Algorithm::fp && !(fp_gamma > 0.0))
        throw ConfigError("fp_gamma must be positive");
    if (algorithm == Algorithm::pma && !(pma_gamma > 0.0 && pma_dt > 0.0))
        throw ConfigError("pma_gamma and pma_dt must be positive");
    if (!(newton_delta_scale >= 0.0))
        throw ConfigError("newton_delta_scale must be non-negative");
    if (!(shift_epsilon > 0.0)) throw ConfigError("shift_epsilon must be positive");
    if (!(equi_tol > 0.0)) throw ConfigError("equi_tol must be positive");
    if (max_outer < 1) throw ConfigError("max_outer must be at least 1");
    if (!(lin.abs_tol > 0.0 && lin.rel_tol > 0.0))
        throw ConfigError("linear solver tolerances must be positive");
    if (lin.correctors < 1) throw ConfigError("correctors must be at least 1");
}

SolverState make_solver_state(int n) {
    SolverState st;
    st.mesh = make_mesh_pair(n);
    st.phi = ScalarField::cells(st.mesh.computational.cell_count());
    st.last_update.dphi = ScalarField::cells(st.mesh.computational.cell_count());
    return st;
}

ScalarField det_i_plus_h(const TensorField& H) {
    ScalarField out = ScalarField::cells(H.size());
    for (std::size_t i = 0; i < H.size(); ++i)
        out[i] = (Mat2::Identity() + H[i]).determinant();
    return out;
}

TensorField cofactor2d(const TensorField& H) {
    TensorField A(H.size());
    for (std::size_t i = 0; i < H.size(); ++i) {
        const Mat2& h = H[i];
        A[i] << 1.0 + h(1, 1), -h(0, 1), -h(0, 1), 1.0 + h(0, 0);
    }
    return A;
}

Regularised regularise(const TensorField& A, double shift_epsilon) {
    Regularised out;
    out.B = A;
    out.gamma = ScalarField::cells(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
        const Mat2& a = A[i];
        const double mean = 0.5 * (a(0, 0) + a(1, 1));
        const double rad = std::hypot(0.5 * (a(0, 0) - a(1, 1)), a(0, 1));
        const double lambda_min = mean - rad;
        if (!(lambda_min > 0.0)) {
            const double gamma = shift_epsilon - lambda_min;
            out.gamma[i] = gamma;
            out.B[i] += gamma * Mat2::Identity();
        }
    }
    return out;
}

namespace {

struct StateEval {
    ScalarField m;    // monitor at the physical cell centres
    TensorField H;    // Hessian of phi on the computational mesh
    TensorField A;    // cofactors of I + H
    ScalarField det;  // |I + H|
    double c = 0.0;
    double equi = 0.0;
    double max_residual = 0.0;
    double min_cof_eig = 0.0;
};

double min_eigenvalue(const Mat2& a) {
    const double mean = 0.5 * (a(0, 0) + a(1, 1));
    const double rad = std::hypot(0.5 * (a(0, 0) - a(1, 1)), a(0, 1));
    return mean - rad;
}

double compute_c_impl(const ScalarField& det, const ScalarField& m,
                      const std::vector<double>& volumes) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < det.size(); ++i) {
        num += volumes[i] * det[i];
        den += volumes[i] / m[i];
    }
    return num / den;
}

double equidistribution_impl(const ScalarField& det, const ScalarField& m) {
    const std::size_t k = det.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += m[i] * det[i];
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = m[i] * det[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(k);
    return std::sqrt(var) / mean;
}

StateEval evaluate(const SolverState& state, const MonitorSpec& monitor) {
    const Mesh& comp = state.mesh.computational;
    StateEval ev;
    ev.m = ScalarField::cells(comp.cell_count());
    ev.m.values = eval_monitor(monitor, state.mesh.physical.cell_centres);
    ev.H = hessian(state.phi, comp);
    ev.A = cofactor2d(ev.H);
    ev.det = det_i_plus_h(ev.H);
    ev.c = compute_c_impl(ev.det, ev.m, comp.cell_volumes);
    ev.equi = equidistribution_impl(ev.det, ev.m);
    ev.max_residual = 0.0;
    ev.min_cof_eig = std::numeric_limits<double>::max();
    for (int i = 0; i < comp.cell_count(); ++i) {
        ev.max_residual = std::max(ev.max_residual, std::abs(ev.m[i] * ev.det[i] - ev.c));
        ev.min_cof_eig = std::min(ev.min_cof_eig, min_eigenvalue(ev.A[i]));
    }
    return ev;
}

ConvergenceRecord base_record(const SolverState& state, const StateEval& ev) {
    ConvergenceRecord rec;
    rec.iteration = state.iteration;
    rec.equi = ev.equi;
    rec.max_residual = ev.max_residual;
    const TanglingReport tang = tangling_check(state.mesh.physical);
    rec.min_vol = tang.min_cell_volume;
    rec.tangled = tang.tangled;
    rec.min_eig = ev.min_cof_eig;
    return rec;
}

void apply_potential(SolverState& state, ScalarField new_phi) {
    state.phi = std::move(new_phi);
    const VectorField grads = corner_gradient(state.phi, state.mesh.computational);
    state.mesh = update_physical_mesh(state.mesh, grads);
}

void finish_step(SolverState& state, ConvergenceRecord& rec) {
    state.history.push_back(rec);
    state.iteration += 1;
}

Eigen::VectorXd to_vector(const ScalarField& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.values.data(),
                                             static_cast<Eigen::Index>(f.size()));
}

ScalarField to_field(const Eigen::VectorXd& v) {
    ScalarField f = ScalarField::cells(static_cast<std::size_t>(v.size()));
    Eigen::Map<Eigen::VectorXd>(f.values.data(), v.size()) = v;
    return f;
}

} // namespace

double compute_c(const SolverState& state, const ScalarField& m_values) {
    const TensorField H = hessian(state.phi, state.mesh.computational);
    return compute_c_impl(det_i_plus_h(H), m_values,
                          state.mesh.computational.cell_volumes);
}

double equidistribution(const SolverState& state, const ScalarField& m_values) {
    const TensorField H = hessian(state.phi, state.mesh.computational);
    return equidistribution_impl(det_i_plus_h(H), m_values);
}

// gamma lap(phi') = gamma lap(phi) - |I+H(phi)| + c/m, solved for phi' on the
// pinned Poisson system.
ConvergenceRecord fp_step(SolverState& state, const SolverConfig& cfg,
                          const MonitorSpec& monitor) {
    const Mesh& comp = state.mesh.computational;
    const StateEval ev = evaluate(state, monitor);
    ConvergenceRecord rec = base_record(state, ev);

    // solved with a zero reference value, shifted to the configured pin value
    // afterwards; see the note in the deferred-correction driver
    const ScalarField lap = laplacian(state.phi, comp);
    SparseSystem sys =
        pin_reference(assemble_poisson(comp, cfg.fp_gamma), cfg.lin.pin_cell, 0.0);
    for (int i = 0; i < comp.cell_count(); ++i)
        sys.b[i] = cfg.fp_gamma * lap[i] - ev.det[i] + ev.c / ev.m[i];
    sys.b[cfg.lin.pin_cell] = 0.0;

    SolveStats stats;
    Eigen::VectorXd guess = to_vector(state.phi);
    guess.array() -= guess[cfg.lin.pin_cell];
    Eigen::VectorXd phi_new = solve(sys, cfg.lin, guess, &stats);
    if (cfg.lin.pin_value != 0.0)
        phi_new.array() += cfg.lin.pin_value - phi_new[cfg.lin.pin_cell];
    rec.inner_iters = stats.iterations;

    ScalarField next = to_field(phi_new);
    for (std::size_t i = 0; i < next.size(); ++i)
        state.last_update.dphi[i] = next[i] - state.phi[i];
    apply_potential(state, std::move(next));
    finish_step(state, rec);
    return rec;
}

// div(B grad dphi) = -|I+H(phi)| + c/m with B the regularised cofactor
// matrix; the parameter-free scheme.
ConvergenceRecord afp_step(SolverState& state, const SolverConfig& cfg,
                           const MonitorSpec& monitor) {
    const Mesh& comp = state.mesh.computational;
    const StateEval ev = evaluate(state, monitor);
    ConvergenceRecord rec = base_record(state, ev);

    const Regularised reg = regularise(ev.A, cfg.shift_epsilon);
    rec.gamma_max = *std::max_element(reg.gamma.values.begin(), reg.gamma.values.end());

    ScalarField rhs = ScalarField::cells(comp.cell_count());
    for (int i = 0; i < comp.cell_count(); ++i) rhs[i] = -ev.det[i] + ev.c / ev.m[i];

    SolveStats stats;
    const ScalarField dphi = tensor_laplacian_solve(reg.B, rhs, comp, cfg.lin,
                                                    &state.last_update.dphi, &stats);
    rec.inner_iters = stats.iterations;

    ScalarField next = state.phi;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += dphi[i];
    state.last_update.dphi = dphi;
    apply_potential(state, std::move(next));
    finish_step(state, rec);
    return rec;
}

// delta dphi + div(B grad dphi) - u . grad(dphi) = -|I+H(phi)| + c/m with
// u = grad_x(c/m) on the physical mesh: the full linearisation, an
// advection-diffusion equation for the increment. A transiently tangled
// iterate is tolerated (the record carries the flag and the run driver fails
// persistent tangling); collapsed geometry surfaces as
// SingularGeometryError from the least-squares gradient.
ConvergenceRecord newton_step(SolverState& state, const SolverConfig& cfg,
                              const MonitorSpec& monitor) {
    const Mesh& comp = state.mesh.computational;
    const Mesh& phys = state.mesh.physical;

    const StateEval ev = evaluate(state, monitor);
    ConvergenceRecord rec = base_record(state, ev);

    VectorField u = VectorField::cells(comp.cell_count());
    if (cfg.newton_analytic_gradient) {
        // grad_x(c/m) = -c grad(m)/m^2 evaluated at the physical centres
        const std::vector<Vec2> gm = monitor_grad_analytic(monitor, phys.cell_centres);
        for (int i = 0; i < comp.cell_count(); ++i)
            u[i] = -ev.c / (ev.m[i] * ev.m[i]) * gm[i];
    } else {
        ScalarField cm = ScalarField::cells(comp.cell_count());
        for (int i = 0; i < comp.cell_count(); ++i) cm[i] = ev.c / ev.m[i];
        u = physical_gradient_ls(cm, phys);
    }

    const double min_vol =
        *std::min_element(comp.cell_volumes.begin(), comp.cell_volumes.end());
    const double delta = cfg.newton_delta_scale / min_vol;

    const Regularised reg = regularise(ev.A, cfg.shift_epsilon);
    rec.gamma_max = *std::max_element(reg.gamma.values.begin(), reg.gamma.values.end());

    ScalarField rhs = ScalarField::cells(comp.cell_count());
    for (int i = 0; i < comp.cell_count(); ++i) rhs[i] = -ev.det[i] + ev.c / ev.m[i];

    SolveStats stats;
    const ScalarField dphi = advection_diffusion_solve(
        reg.B, u, delta, rhs, comp, cfg.lin, &state.last_update.dphi, &stats);
    rec.inner_iters = stats.iterations;

    ScalarField next = state.phi;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += dphi[i];
    state.last_update.dphi = dphi;
    apply_potential(state, std::move(next));
    finish_step(state, rec);
    return rec;
}

// (I - gamma lap) phi' = (I - gamma lap) phi + (q - qbar) with
// q = dt (m |I+H|)^(1/2); subtracting the volume-weighted mean keeps the
// potential's integral fixed, which is the drift-fixing constant.
ConvergenceRecord pma_step(SolverState& state, const SolverConfig& cfg,
                           const MonitorSpec& monitor) {
    const Mesh& comp = state.mesh.computational;
    const StateEval ev = evaluate(state, monitor);
    ConvergenceRecord rec = base_record(state, ev);

    ScalarField q = ScalarField::cells(comp.cell_count());
    double qbar = 0.0, vol = 0.0;
    for (int i = 0; i < comp.cell_count(); ++i) {
        const double radicand = ev.m[i] * ev.det[i];
        if (!(radicand > 0.0))
            throw DivergenceError("monitor-weighted Jacobian became non-positive; "
                                  "the iterate left the convex regime");
        q[i] = cfg.pma_dt * std::sqrt(radicand);
        qbar += comp.cell_volumes[i] * q[i];
        vol += comp.cell_volumes[i];
    }
    qbar /= vol;

    const ScalarField lap = laplacian(state.phi, comp);
    SparseSystem sys = assemble_helmholtz(comp, cfg.pma_gamma);
    for (int i = 0; i < comp.cell_count(); ++i)
        sys.b[i] = state.phi[i] - cfg.pma_gamma * lap[i] + (q[i] - qbar);

    SolveStats stats;
    const Eigen::VectorXd phi_new = solve(sys, cfg.lin, to_vector(state.phi), &stats);
    rec.inner_iters = stats.iterations;

    ScalarField next = to_field(phi_new);
    for (std::size_t i = 0; i < next.size(); ++i)
        state.last_update.dphi[i] = next[i] - state.phi[i];
    apply_potential(state, std::move(next));
    finish_step(state, rec);
    return rec;
}

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::max_iterations: return "max_iterations";
        case RunStatus::diverged: return "diverged";
        case RunStatus::tangled: return "tangled";
        case RunStatus::solver_stall: return "solver_stall";
        case RunStatus::not_finite: return "not_finite";
    }
    return "?";
}

RunResult run(const SolverConfig& cfg, const MonitorSpec& monitor, int n) {
    cfg.validate();
    monitor.validate();

    SolverState state = make_solver_state(n);
    RunResult out;
    double equi0 = -1.0;
    // A tangled iterate is tolerated while the iteration can still recover
    // (Newton in particular overshoots early and heals); only persistent
    // tangling is catastrophic.
    constexpr int max_consecutive_tangled = 5;
    int consecutive_tangled = 0;

    while (true) {
        const StateEval ev = evaluate(state, monitor);
        ConvergenceRecord rec = base_record(state, ev);
        consecutive_tangled = rec.tangled ? consecutive_tangled + 1 : 0;

        if (!std::isfinite(ev.equi)) {
            state.history.push_back(rec);
            out.status = RunStatus::not_finite;
            out.message = "equidistribution became non-finite";
            break;
        }
        if (equi0 < 0.0) equi0 = ev.equi;
        if (ev.equi < cfg.equi_tol) {
            state.history.push_back(rec);
            if (rec.tangled) {
                out.status = RunStatus::tangled;
                out.message = "equidistribution met the tolerance on a tangled mesh";
            } else {
                out.status = RunStatus::converged;
                out.converged = true;
            }
            break;
        }
        if (consecutive_tangled >= max_consecutive_tangled) {
            state.history.push_back(rec);
            out.status = RunStatus::tangled;
            out.message = "physical mesh tangled for " +
                          std::to_string(consecutive_tangled) + " consecutive iterations";
            break;
        }
        if (equi0 > 0.0 && ev.equi > 1e3 * equi0) {
            state.history.push_back(rec);
            out.status = rec.tangled ? RunStatus::tangled : RunStatus::diverged;
            out.message = "equidistribution grew 1000x beyond its initial value";
            break;
        }
        if (state.iteration >= cfg.max_outer) {
            state.history.push_back(rec);
            out.status = RunStatus::max_iterations;
            out.message = "outer iteration budget exhausted";
            break;
        }

        try {
            switch (cfg.algorithm) {
                case Algorithm::fp: fp_step(state, cfg, monitor); break;
                case Algorithm::afp: afp_step(state, cfg, monitor); break;
                case Algorithm::newton: newton_step(state, cfg, monitor); break;
                case Algorithm::pma: pma_step(state, cfg, monitor); break;
            }
        } catch (const SolverStallError& e) {
            state.history.push_back(rec);
            out.status = RunStatus::solver_stall;
            out.message = e.what();
            break;
        } catch (const TanglingError& e) {
            state.history.push_back(rec);
            out.status = RunStatus::tangled;
            out.message = e.what();
            break;
        } catch (const SingularGeometryError& e) {
            state.history.push_back(rec);
            out.status = RunStatus::tangled;
            out.message = e.what();
            break;
        } catch (const DivergenceError& e) {
            state.history.push_back(rec);
            out.status = RunStatus::diverged;
            out.message = e.what();
            break;
        }
    }

    out.iterations = state.iteration;
    out.phi = std::move(state.phi);
    out.mesh = std::move(state.mesh);
    out.history = std::move(state.history);
    return out;
}

} // namespace mamesh
