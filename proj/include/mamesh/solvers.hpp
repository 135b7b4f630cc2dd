#pragma once

#include "mamesh/fields.hpp"
#include "mamesh/geometry.hpp"
#include "mamesh/linalg.hpp"
#include "mamesh/monitor.hpp"

#include <string>
#include <vector>

namespace mamesh {

enum class Algorithm { fp, afp, newton, pma };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct SolverConfig {
    Algorithm algorithm = Algorithm::afp;

    double fp_gamma = 1.0;     // FP under-relaxation weight
    double pma_gamma = 0.7;    // PMA smoothing coefficient
    double pma_dt = 0.2;       // PMA pseudo-time step
    double newton_delta_scale = 1e-4;  // delta = scale / min cell volume
    bool newton_analytic_gradient = false;  // use the analytic monitor gradient

    double shift_epsilon = 1e-5;  // eigenvalue shift floor of the regularisation
    double equi_tol = 1e-8;       // stop when the equidistribution drops below
    int max_outer = 2000;

    LinSolveConfig lin;

    void validate() const;  // throws ConfigError
};

/// Diagnostics of one outer iteration. equi/max_residual/min_vol/min_eig
/// describe the state BEFORE the step; gamma_max and inner_iters describe
/// the step taken from it.
struct ConvergenceRecord {
    int iteration = 0;
    double equi = 0.0;          // coefficient of variation of m |I+H|
    double max_residual = 0.0;  // max |m |I+H| - c|
    double min_vol = 0.0;       // min physical cell volume
    double min_eig = 0.0;       // min eigenvalue of the cofactor matrix
    double gamma_max = 0.0;     // largest eigenvalue shift applied (0 if none)
    int inner_iters = 0;
    bool tangled = false;
};

/// The increment solved for at each iteration (the expansion parameter and
/// the direction are never separated numerically).
struct UpdateField {
    ScalarField dphi;
};

struct SolverState {
    ScalarField phi;
    MeshPair mesh;
    int iteration = 0;
    std::vector<ConvergenceRecord> history;
    UpdateField last_update;  // warm start for the next inner solve
};

SolverState make_solver_state(int n);

/// det(I + H_i) per cell.
ScalarField det_i_plus_h(const TensorField& H);

/// The equidistribution constant that makes the discrete right-hand side
/// -|I+H| + c/m volume-weighted mean zero:
///   c = sum_i V_i |I+H|_i / sum_i (V_i / m_i).
double compute_c(const SolverState& state, const ScalarField& m_values);

/// Coefficient of variation of m |I+H| over cells (unweighted); zero exactly
/// at the solution.
double equidistribution(const SolverState& state, const ScalarField& m_values);

/// Matrix of cofactors of I + H per cell: [[1+Hyy, -Hxy], [-Hxy, 1+Hxx]].
TensorField cofactor2d(const TensorField& H);

struct Regularised {
    TensorField B;      // A + gamma I, positive definite per cell
    ScalarField gamma;  // per-cell shift actually applied (0 where A was PD)
};

/// Shifts the spectrum of each cell's matrix to at least shift_epsilon:
/// gamma = 0 if lambda_min > 0, else shift_epsilon - lambda_min.
Regularised regularise(const TensorField& A, double shift_epsilon);

// One outer iteration of each scheme. Each step records its diagnostics in
// state.history and moves the physical mesh to match the new potential.
ConvergenceRecord fp_step(SolverState& state, const SolverConfig& cfg,
                          const MonitorSpec& monitor);
ConvergenceRecord afp_step(SolverState& state, const SolverConfig& cfg,
                           const MonitorSpec& monitor);
ConvergenceRecord newton_step(SolverState& state, const SolverConfig& cfg,
                              const MonitorSpec& monitor);
ConvergenceRecord pma_step(SolverState& state, const SolverConfig& cfg,
                           const MonitorSpec& monitor);

enum class RunStatus {
    converged,
    max_iterations,
    diverged,     // equidistribution grew by 1000x or an update became invalid
    tangled,
    solver_stall,
    not_finite,
};

std::string to_string(RunStatus s);

struct RunResult {
    RunStatus status = RunStatus::max_iterations;
    bool converged = false;
    int iterations = 0;  // outer steps taken
    ScalarField phi;
    MeshPair mesh;
    std::vector<ConvergenceRecord> history;
    std::string message;
};

/// Builds the mesh and iterates the selected scheme until the
/// equidistribution drops below cfg.equi_tol, the iteration budget runs out
/// or the run fails. The equidistribution is evaluated before each step, so
/// iteration 0 records the initial misfit. A transiently tangled iterate is
/// recorded but tolerated; tangling is fatal when it persists over several
/// consecutive iterations, accompanies a 1000x growth of the misfit, or
/// survives to the converged state.
RunResult run(const SolverConfig& cfg, const MonitorSpec& monitor, int n);

} // namespace mamesh
