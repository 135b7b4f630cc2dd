#include "mamesh/fvops.hpp"

#include "mamesh/errors.hpp"

#include <cmath>

namespace mamesh {

namespace {

void check_cells(const ScalarField& f, const Mesh& m) {
    if (f.location != FieldLocation::cell ||
        f.size() != static_cast<std::size_t>(m.cell_count()))
        throw InvalidMeshError("scalar field does not live on this mesh's cells");
}

} // namespace

ScalarField laplacian(const ScalarField& phi, const Mesh& m) {
    check_cells(phi, m);
    ScalarField out = ScalarField::cells(m.cell_count());
    for (const Face& f : m.faces) {
        const double flux =
            f.area.norm() * (phi[f.neighbour] - phi[f.owner]) / f.d.norm();
        out[f.owner] += flux / m.cell_volumes[f.owner];
        out[f.neighbour] -= flux / m.cell_volumes[f.neighbour];
    }
    return out;
}

VectorField cell_gradient(const ScalarField& phi, const Mesh& m) {
    check_cells(phi, m);
    VectorField out = VectorField::cells(m.cell_count());
    for (const Face& f : m.faces) {
        const double phi_f =
            f.owner_weight * phi[f.owner] + (1.0 - f.owner_weight) * phi[f.neighbour];
        out[f.owner] += phi_f / m.cell_volumes[f.owner] * f.area;
        out[f.neighbour] -= phi_f / m.cell_volumes[f.neighbour] * f.area;
    }
    return out;
}

ScalarField face_normal_gradient(const ScalarField& phi, const Mesh& m) {
    check_cells(phi, m);
    ScalarField out = ScalarField::faces(m.face_count());
    for (int k = 0; k < m.face_count(); ++k) {
        const Face& f = m.faces[k];
        out[k] = (phi[f.neighbour] - phi[f.owner]) / f.d.norm();
    }
    return out;
}

VectorField corrected_face_gradient(const ScalarField& phi, const Mesh& m) {
    const VectorField cg = cell_gradient(phi, m);
    const ScalarField gn = face_normal_gradient(phi, m);
    VectorField out = VectorField::faces(m.face_count());
    for (int k = 0; k < m.face_count(); ++k) {
        const Face& f = m.faces[k];
        const Vec2 shat = f.area.normalized();
        const Vec2 interp =
            f.owner_weight * cg[f.owner] + (1.0 - f.owner_weight) * cg[f.neighbour];
        out[k] = interp + (gn[k] - interp.dot(shat)) * shat;
    }
    return out;
}

TensorField hessian(const ScalarField& phi, const Mesh& m) {
    const VectorField fg = corrected_face_gradient(phi, m);
    TensorField out(m.cell_count());
    for (int k = 0; k < m.face_count(); ++k) {
        const Face& f = m.faces[k];
        const Mat2 contrib = fg[k] * f.area.transpose();
        out[f.owner] += contrib / m.cell_volumes[f.owner];
        out[f.neighbour] -= contrib / m.cell_volumes[f.neighbour];
    }
    for (auto& H : out.values) H = 0.5 * (H + H.transpose()).eval();
    return out;
}

VectorField corner_gradient(const ScalarField& phi, const Mesh& m) {
    const ScalarField gn = face_normal_gradient(phi, m);
    VectorField out = VectorField::corners(m.corner_count());
    for (int c = 0; c < m.corner_count(); ++c) {
        const auto& vf = m.corner_vfaces[c];
        const auto& hf = m.corner_hfaces[c];
        out[c] = Vec2(0.5 * (gn[vf[0]] + gn[vf[1]]), 0.5 * (gn[hf[0]] + gn[hf[1]]));
    }
    return out;
}

VectorField physical_gradient_ls(const ScalarField& g, const Mesh& physical) {
    check_cells(g, physical);
    VectorField out = VectorField::cells(physical.cell_count());
    for (int c = 0; c < physical.cell_count(); ++c) {
        Mat2 normal = Mat2::Zero();
        Vec2 rhs = Vec2::Zero();
        for (int k = 0; k < 4; ++k) {
            const Face& f = physical.faces[physical.cell_face_ids[c][k]];
            const Vec2 d = (f.owner == c) ? f.d : Vec2(-f.d);
            const int nb = (f.owner == c) ? f.neighbour : f.owner;
            normal += d * d.transpose();
            rhs += d * (g[nb] - g[c]);
        }
        const double det = normal.determinant();
        const double scale = normal.diagonal().sum();
        if (!(std::abs(det) > 1e-14 * scale * scale)) {
            throw SingularGeometryError(
                "degenerate neighbourhood in least-squares gradient at cell " +
                    std::to_string(c),
                c);
        }
        out[c] = normal.inverse() * rhs;
    }
    return out;
}

ScalarField divergence(const VectorField& u, const Mesh& m) {
    ScalarField out = ScalarField::cells(m.cell_count());
    for (const Face& f : m.faces) {
        const Vec2 u_f =
            f.owner_weight * u[f.owner] + (1.0 - f.owner_weight) * u[f.neighbour];
        const double flux = u_f.dot(f.area);
        out[f.owner] += flux / m.cell_volumes[f.owner];
        out[f.neighbour] -= flux / m.cell_volumes[f.neighbour];
    }
    return out;
}

ScalarField tensor_diffusion_apply(const TensorField& B, const ScalarField& psi,
                                   const Mesh& m) {
    const VectorField fg = corrected_face_gradient(psi, m);
    ScalarField out = ScalarField::cells(m.cell_count());
    for (int k = 0; k < m.face_count(); ++k) {
        const Face& f = m.faces[k];
        const Mat2 B_f = 0.5 * (B[f.owner] + B[f.neighbour]);
        const double flux = (B_f * fg[k]).dot(f.area);
        out[f.owner] += flux / m.cell_volumes[f.owner];
        out[f.neighbour] -= flux / m.cell_volumes[f.neighbour];
    }
    return out;
}

ScalarField conservative_advection(const VectorField& u, const ScalarField& psi,
                                   const Mesh& m) {
    // div(u psi) and psi div(u) assembled from the same face fluxes, so the
    // pair reduces to sum_f F_f (psi_f - psi_i) per cell.
    ScalarField out = ScalarField::cells(m.cell_count());
    for (const Face& f : m.faces) {
        const Vec2 u_f =
            f.owner_weight * u[f.owner] + (1.0 - f.owner_weight) * u[f.neighbour];
        const double flux = u_f.dot(f.area);
        const double psi_f =
            f.owner_weight * psi[f.owner] + (1.0 - f.owner_weight) * psi[f.neighbour];
        out[f.owner] += flux * (psi_f - psi[f.owner]) / m.cell_volumes[f.owner];
        out[f.neighbour] -= flux * (psi_f - psi[f.neighbour]) / m.cell_volumes[f.neighbour];
    }
    return out;
}

} // namespace mamesh
