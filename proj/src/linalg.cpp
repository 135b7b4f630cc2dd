#include "mamesh/linalg.hpp"

#include "mamesh/errors.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace mamesh {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_laplacian_triplets(const Mesh& m, double coeff, Triplets& t) {
    for (const Face& f : m.faces) {
        const double a = coeff * f.area.norm() / f.d.norm();
        t.emplace_back(f.owner, f.neighbour, a / m.cell_volumes[f.owner]);
        t.emplace_back(f.owner, f.owner, -a / m.cell_volumes[f.owner]);
        t.emplace_back(f.neighbour, f.owner, a / m.cell_volumes[f.neighbour]);
        t.emplace_back(f.neighbour, f.neighbour, -a / m.cell_volumes[f.neighbour]);
    }
}

// Face coefficients Shat^T B_f Shat of the implicit normal-direction flux.
std::vector<double> normal_face_coeffs(const TensorField& B, const Mesh& m) {
    std::vector<double> coeffs(m.face_count());
    for (int k = 0; k < m.face_count(); ++k) {
        const Face& f = m.faces[k];
        const Mat2 B_f = 0.5 * (B[f.owner] + B[f.neighbour]);
        const Vec2 shat = f.area.normalized();
        coeffs[k] = shat.dot(B_f * shat);
        if (!(coeffs[k] > 0.0)) {
            throw EllipticityLostError(
                "non-positive face diffusion coefficient on face " + std::to_string(k) +
                "; regularise the tensor before solving");
        }
    }
    return coeffs;
}

void add_tensor_normal_triplets(const Mesh& m, const std::vector<double>& coeffs,
                                Triplets& t) {
    for (int k = 0; k < m.face_count(); ++k) {
        const Face& f = m.faces[k];
        const double a = coeffs[k] * f.area.norm() / f.d.norm();
        t.emplace_back(f.owner, f.neighbour, a / m.cell_volumes[f.owner]);
        t.emplace_back(f.owner, f.owner, -a / m.cell_volumes[f.owner]);
        t.emplace_back(f.neighbour, f.owner, a / m.cell_volumes[f.neighbour]);
        t.emplace_back(f.neighbour, f.neighbour, -a / m.cell_volumes[f.neighbour]);
    }
}

// Tangential remainder of the diffusive flux, evaluated explicitly from the
// current iterate. Uses the corrected face gradient, whose normal component
// matches the implicit two-point flux exactly.
ScalarField tangential_flux(const TensorField& B, const ScalarField& psi,
                            const Mesh& m) {
    const VectorField fg = corrected_face_gradient(psi, m);
    ScalarField out = ScalarField::cells(m.cell_count());
    for (int k = 0; k < m.face_count(); ++k) {
        const Face& f = m.faces[k];
        const Mat2 B_f = 0.5 * (B[f.owner] + B[f.neighbour]);
        const Vec2 shat = f.area.normalized();
        const Vec2 tangential = fg[k] - fg[k].dot(shat) * shat;
        const double flux = (B_f * tangential).dot(f.area);
        out[f.owner] += flux / m.cell_volumes[f.owner];
        out[f.neighbour] -= flux / m.cell_volumes[f.neighbour];
    }
    return out;
}

SparseSystem finish_assembly(int n_cells, Triplets& t) {
    SparseSystem sys;
    sys.M.resize(n_cells, n_cells);
    sys.M.setFromTriplets(t.begin(), t.end());
    sys.b = Eigen::VectorXd::Zero(n_cells);
    return sys;
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

using Solver =
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>;

void configure(Solver& s) {
    s.preconditioner().setDroptol(1e-4);
    s.preconditioner().setFillfactor(10);
}

Eigen::VectorXd krylov_solve(Solver& solver, const Eigen::SparseMatrix<double>& M,
                             const Eigen::VectorXd& b, const LinSolveConfig& cfg,
                             const Eigen::VectorXd& guess, SolveStats* stats) {
    if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0) || cfg.max_inner < 1)
        throw ConfigError("linear solver tolerances must be positive");
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        // nonsingular (pinned) system with zero rhs: the solution is zero
        if (stats) stats->final_residual = 0.0;
        return Eigen::VectorXd::Zero(b.size());
    }
    // Residuals are normalised by the size of the equation's terms (the
    // convention of FV solver packages): a raw 1e-12 floor would sit below
    // round-off once the matrix norm grows with the cell count.
    const Eigen::VectorXd ref =
        M * Eigen::VectorXd::Constant(b.size(), guess.mean());
    const double norm_factor =
        (M * guess - ref).norm() + (b - ref).norm() + 1e-300;
    const double r0 = (b - M * guess).norm() / norm_factor;
    const double threshold = std::max(cfg.abs_tol, cfg.rel_tol * r0);
    if (r0 <= threshold) {
        if (stats) stats->final_residual = r0;
        return guess;
    }

    // Solve in chunks so a stall leaves a residual history behind.
    constexpr int chunk = 100;
    Eigen::VectorXd x = guess;
    std::vector<double> history{r0};
    int used = 0;
    solver.setTolerance(threshold * norm_factor / bnorm);
    while (used < cfg.max_inner) {
        solver.setMaxIterations(std::min(chunk, cfg.max_inner - used));
        x = solver.solveWithGuess(b, x);
        used += static_cast<int>(solver.iterations());
        const double res = (b - M * x).norm() / norm_factor;
        history.push_back(res);
        if (res <= threshold) {
            if (stats) {
                stats->iterations += used;
                stats->final_residual = res;
            }
            return x;
        }
        if (!std::isfinite(res)) break;       // breakdown, e.g. a singular system
        if (solver.iterations() == 0) break;  // solver cannot make progress
    }
    char msg[128];
    std::snprintf(msg, sizeof(msg), "linear solver stalled at residual %.3e (target %.3e)",
                  history.back(), threshold);
    throw SolverStallError(msg, history);
}

} // namespace

SparseSystem assemble_poisson(const Mesh& m, double coeff) {
    if (coeff == 0.0) throw ConfigError("Poisson coefficient must be nonzero");
    Triplets t;
    t.reserve(4 * m.face_count());
    add_laplacian_triplets(m, coeff, t);
    return finish_assembly(m.cell_count(), t);
}

SparseSystem assemble_helmholtz(const Mesh& m, double gamma) {
    Triplets t;
    t.reserve(4 * m.face_count() + m.cell_count());
    add_laplacian_triplets(m, -gamma, t);
    for (int c = 0; c < m.cell_count(); ++c) t.emplace_back(c, c, 1.0);
    return finish_assembly(m.cell_count(), t);
}

SparseSystem pin_reference(SparseSystem sys, int cell, double value) {
    if (cell < 0 || cell >= sys.M.rows())
        throw ConfigError("pin cell " + std::to_string(cell) + " out of range");
    sys.M.prune([cell](Eigen::Index row, Eigen::Index, double) {
        return row != static_cast<Eigen::Index>(cell);
    });
    sys.M.coeffRef(cell, cell) = 1.0;
    sys.M.makeCompressed();
    sys.b[cell] = value;
    sys.pin = {cell, value};
    return sys;
}

Eigen::VectorXd solve(const SparseSystem& sys, const LinSolveConfig& cfg,
                      const Eigen::VectorXd& guess, SolveStats* stats) {
    Solver solver;
    configure(solver);
    solver.compute(sys.M);
    return krylov_solve(solver, sys.M, sys.b, cfg, guess, stats);
}

namespace {

// Shared deferred-correction driver for the tensor-diffusion solves. Extra
// row terms (the Newton delta and advection) arrive pre-assembled in `t`.
// Pinned solves run with a zero reference value; the requested pin value is
// restored as an exact constant shift at the end (the other rows have zero
// row sums, so the two solutions differ by precisely that constant). Keeping
// the iterate free of a large constant keeps the round-off floor of the
// residual below the solver tolerances.
ScalarField deferred_correction_solve(const TensorField& B, const ScalarField& rhs,
                                      const Mesh& m, const LinSolveConfig& cfg,
                                      Triplets t, bool pinned,
                                      const ScalarField* guess, SolveStats* stats) {
    const auto coeffs = normal_face_coeffs(B, m);
    add_tensor_normal_triplets(m, coeffs, t);
    SparseSystem sys = finish_assembly(m.cell_count(), t);
    if (pinned) sys = pin_reference(std::move(sys), cfg.pin_cell, 0.0);

    ScalarField b = rhs;
    if (pinned) {
        double weighted = 0.0, total = 0.0;
        for (int c = 0; c < m.cell_count(); ++c) {
            weighted += m.cell_volumes[c] * rhs[c];
            total += m.cell_volumes[c];
        }
        if (std::abs(weighted) > 1e-10) {
            const double shift = weighted / total;
            for (double& v : b.values) v -= shift;
            if (stats) stats->rhs_projection = std::abs(weighted);
        }
    }

    Solver solver;
    configure(solver);
    solver.compute(sys.M);

    // The caller's guess only warm-starts the first Krylov solve; the
    // tangential correction is linearised from zero so that each outer
    // iteration sees the same sweep sequence regardless of history.
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(m.cell_count());
    Eigen::VectorXd start = guess ? to_vector(*guess) : psi;
    if (pinned && guess)
        start.array() -= start[cfg.pin_cell];  // align the guess with the zero pin
    const int sweeps = std::max(1, cfg.correctors);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        const ScalarField tang = tangential_flux(B, to_field(psi), m);
        Eigen::VectorXd bs = to_vector(b) - to_vector(tang);
        if (sys.pin) bs[sys.pin->first] = sys.pin->second;
        psi = krylov_solve(solver, sys.M, bs, cfg, sweep == 0 ? start : psi, stats);
        if (stats) stats->sweeps += 1;
    }
    if (pinned && cfg.pin_value != 0.0)
        psi.array() += cfg.pin_value - psi[cfg.pin_cell];
    return to_field(psi);
}

} // namespace

ScalarField tensor_laplacian_solve(const TensorField& B, const ScalarField& rhs,
                                   const Mesh& m, const LinSolveConfig& cfg,
                                   const ScalarField* guess, SolveStats* stats) {
    return deferred_correction_solve(B, rhs, m, cfg, {}, /*pinned=*/true, guess, stats);
}

ScalarField advection_diffusion_solve(const TensorField& B, const VectorField& u,
                                      double delta, const ScalarField& rhs,
                                      const Mesh& m, const LinSolveConfig& cfg,
                                      const ScalarField* guess, SolveStats* stats) {
    Triplets t;
    t.reserve(4 * m.face_count() + m.cell_count());
    for (int c = 0; c < m.cell_count(); ++c) t.emplace_back(c, c, delta);
    // -u.grad(psi) in conservative form with central interpolation collapses
    // to sum_f F_f (psi_i - psi_f) per cell, F_f the outward face flux of u.
    for (const Face& f : m.faces) {
        const Vec2 u_f =
            f.owner_weight * u[f.owner] + (1.0 - f.owner_weight) * u[f.neighbour];
        const double flux = u_f.dot(f.area);
        const double wo = f.owner_weight, wn = 1.0 - f.owner_weight;
        t.emplace_back(f.owner, f.owner, flux * (1.0 - wo) / m.cell_volumes[f.owner]);
        t.emplace_back(f.owner, f.neighbour, -flux * wn / m.cell_volumes[f.owner]);
        t.emplace_back(f.neighbour, f.neighbour,
                       -flux * (1.0 - wn) / m.cell_volumes[f.neighbour]);
        t.emplace_back(f.neighbour, f.owner, flux * wo / m.cell_volumes[f.neighbour]);
    }
    return deferred_correction_solve(B, rhs, m, cfg, std::move(t), /*pinned=*/false,
                                     guess, stats);
}

} // namespace mamesh
