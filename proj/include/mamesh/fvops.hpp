#pragma once

#include "mamesh/fields.hpp"
#include "mamesh/geometry.hpp"

namespace mamesh {

/// (lap phi)_i = (1/V_i) sum_f |S_f| (phi_if - phi_i) / |d_f|.
ScalarField laplacian(const ScalarField& phi, const Mesh& m);

/// Divergence-theorem cell gradient: (1/V_i) sum_f phi_f S_f with phi_f
/// linearly interpolated onto the face.
VectorField cell_gradient(const ScalarField& phi, const Mesh& m);

/// Two-point gradient normal to each face: (phi_if - phi_i) / |d_f|.
ScalarField face_normal_gradient(const ScalarField& phi, const Mesh& m);

/// Full face gradient: tangential part from the interpolated cell gradient,
/// normal component replaced by the compact two-point gradient.
VectorField corrected_face_gradient(const ScalarField& phi, const Mesh& m);

/// H_i = (1/V_i) sum_f (grad_f phi) S_f^T, symmetrised afterwards.
TensorField hessian(const ScalarField& phi, const Mesh& m);

/// Reconstructs grad(phi) at mesh corners from the face-normal gradients of
/// the four faces meeting there (uniform computational mesh only).
VectorField corner_gradient(const ScalarField& phi, const Mesh& m);

/// Least-squares gradient over centre-to-centre displacements, the one
/// operator evaluated on the (possibly distorted) physical mesh. Throws
/// SingularGeometryError when a cell's neighbour displacements degenerate.
VectorField physical_gradient_ls(const ScalarField& g, const Mesh& physical);

/// Explicit divergence of a cell vector field: (1/V_i) sum_f u_f . S_f.
ScalarField divergence(const VectorField& u, const Mesh& m);

/// Explicit apply of the full tensor-diffusion operator div(B grad psi),
/// using the corrected face gradient on every face.
ScalarField tensor_diffusion_apply(const TensorField& B, const ScalarField& psi,
                                   const Mesh& m);

/// Conservative advection operator div(u psi) - psi div(u) with central face
/// interpolation; equals u . grad(psi) in the continuum.
ScalarField conservative_advection(const VectorField& u, const ScalarField& psi,
                                   const Mesh& m);

} // namespace mamesh
