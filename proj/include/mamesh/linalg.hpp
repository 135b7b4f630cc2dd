#pragma once

#include "mamesh/fields.hpp"
#include "mamesh/fvops.hpp"
#include "mamesh/geometry.hpp"

#include <Eigen/Sparse>

#include <optional>

namespace mamesh {

/// One row per cell; pattern is cell-self plus the four face neighbours
/// (pentadiagonal with periodic wrap). Rows act like the per-cell operators
/// in fvops, i.e. they carry the 1/V_i factor.
struct SparseSystem {
    Eigen::SparseMatrix<double> M;
    Eigen::VectorXd b;
    std::optional<std::pair<int, double>> pin;  // cell id, pinned value
};

struct LinSolveConfig {
    double abs_tol = 1e-12;
    double rel_tol = 1e-8;
    int max_inner = 5000;
    int correctors = 3;   // deferred-correction sweeps
    int pin_cell = 0;
    double pin_value = 0.0;
};

struct SolveStats {
    int iterations = 0;        // Krylov iterations, accumulated over sweeps
    double final_residual = 0.0;
    double rhs_projection = 0.0;  // magnitude removed to restore compatibility
    int sweeps = 0;
};

/// coeff * laplacian as a matrix. coeff must be nonzero.
SparseSystem assemble_poisson(const Mesh& m, double coeff);

/// Helmholtz operator (I - gamma * laplacian); nonsingular on the periodic
/// mesh, so it needs no pinning.
SparseSystem assemble_helmholtz(const Mesh& m, double gamma);

/// Replaces one row by an identity row with rhs = value, removing the
/// constant null space of the periodic Laplacian. Which cell and what value
/// only shift the potential, not its gradient.
SparseSystem pin_reference(SparseSystem sys, int cell, double value);

/// Iterative solve to ||Mx - b|| <= max(abs_tol, rel_tol * ||M x0 - b||),
/// residuals measured relative to ||b|| (the normalised-residual convention
/// of FV solver packages). Throws SolverStallError (with the residual
/// history) on non-convergence.
Eigen::VectorXd solve(const SparseSystem& sys, const LinSolveConfig& cfg,
                      const Eigen::VectorXd& guess, SolveStats* stats = nullptr);

/// Solves div(B grad psi) = rhs by deferred correction: the face-normal flux
/// (coefficient Shat^T B_f Shat) is implicit, the tangential remainder is
/// re-evaluated from the current iterate; cfg.correctors sweeps, one inner
/// solve each, reference cell pinned. B must be SPD per cell. An rhs whose
/// volume-weighted sum exceeds 1e-10 is projected onto mean zero first and
/// the projection magnitude recorded.
ScalarField tensor_laplacian_solve(const TensorField& B, const ScalarField& rhs,
                                   const Mesh& m, const LinSolveConfig& cfg,
                                   const ScalarField* guess = nullptr,
                                   SolveStats* stats = nullptr);

/// The implicit equation of one Newton iteration:
///   delta psi + div(B grad psi) - u . grad(psi) = rhs
/// with the advection in conservative form (central face interpolation) and
/// the same deferred-correction treatment of the tensor diffusion. The delta
/// term makes the system nonsingular, so no pinning.
ScalarField advection_diffusion_solve(const TensorField& B, const VectorField& u,
                                      double delta, const ScalarField& rhs,
                                      const Mesh& m, const LinSolveConfig& cfg,
                                      const ScalarField* guess = nullptr,
                                      SolveStats* stats = nullptr);

} // namespace mamesh
