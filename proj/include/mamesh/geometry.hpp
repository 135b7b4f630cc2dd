#pragma once

#include "mamesh/fields.hpp"

#include <array>
#include <vector>

namespace mamesh {

/// A face between two cells of the periodic quad mesh.
///
/// Conventions:
///  - `area` (S_f) points from owner to neighbour and has magnitude equal to
///    the face length (unit thickness folded away, so the mesh is genuinely 2D).
///  - `d` is the owner-centre to neighbour-centre vector, wrapped through the
///    periodic boundary where the face crosses it.
///  - Geometry is expressed in the owner's frame: `endpoint_shift[k]` and
///    `neighbour_shift` are the period offsets (multiples of the domain width)
///    that place the endpoints and the neighbour centre next to the owner.
///  - `area` is derived from the ordered endpoints as the -90 degree rotation
///    of (p2 - p1), which keeps the closed-surface identity exact on moved
///    meshes.
struct Face {
    int owner = -1;
    int neighbour = -1;
    std::array<int, 2> endpoints{};        // corner ids, ordered
    std::array<Vec2, 2> endpoint_shift{};  // period offsets of the endpoints
    Vec2 neighbour_shift = Vec2::Zero();   // period offset of the neighbour centre
    bool horizontal = false;               // false: normal ~ +x, true: normal ~ +y

    // derived geometry, filled by recompute_geometry()
    Vec2 area = Vec2::Zero();
    Vec2 d = Vec2::Zero();
    Vec2 centre = Vec2::Zero();
    double owner_weight = 0.5;  // linear interpolation weight of the owner value
};

/// Doubly periodic structured quad mesh on [-1/2, 1/2]^2 with period 1.
///
/// Corners are stored once (N*N unique corners, index j*N+i); cells and faces
/// carry the period offsets needed to unwrap their corners, so there is no
/// duplicated seam geometry that could drift apart.
struct Mesh {
    int n = 0;  // cells per side

    std::vector<Vec2> corners;        // n*n, index j*n+i
    std::vector<Vec2> cell_centres;   // n*n, mean of the 4 cell corners
    std::vector<double> cell_volumes; // n*n, shoelace area of the quad
    std::vector<Face> faces;          // 2*n*n: vertical block first, then horizontal

    // connectivity (fixed after construction)
    std::vector<std::array<int, 4>> cell_corners;        // ccw from the lower-left
    std::vector<std::array<Vec2, 4>> cell_corner_shifts; // period offsets per corner
    std::vector<std::array<int, 4>> cell_face_ids;       // W, E, S, N
    std::vector<std::array<int, 4>> cell_face_signs;     // +1 owner, -1 neighbour
    std::vector<std::array<int, 2>> corner_vfaces;       // vertical faces at a corner
    std::vector<std::array<int, 2>> corner_hfaces;       // horizontal faces at a corner

    int cell_count() const { return n * n; }
    int face_count() const { return 2 * n * n; }
    int corner_count() const { return n * n; }
    int cell_id(int i, int j) const {
        return ((j % n + n) % n) * n + ((i % n + n) % n);
    }
    double total_volume() const;
};

/// Uniform N x N mesh covering [-1/2, 1/2]^2, spacing h = 1/n. Throws
/// InvalidMeshError for n < 3 (the compact stencils need a 3-cell period).
Mesh build_uniform_mesh(int n);

/// Rebuilds centres, volumes and face geometry from the current corner
/// positions. Connectivity is untouched.
void recompute_geometry(Mesh& m);

struct TanglingReport {
    double min_cell_volume = 0.0;
    double min_triangle_area = 0.0;
    bool tangled = false;
};

/// A quad is tangled when either triangle of its diagonal split has
/// non-positive signed area.
TanglingReport tangling_check(const Mesh& m);

/// Fixed computational mesh plus its corner-moved physical image.
struct MeshPair {
    Mesh computational;
    Mesh physical;
    VectorField corner_displacement;  // gradient estimate used for the last move
};

/// Pair with physical == computational (zero displacement).
MeshPair make_mesh_pair(int n);

/// Moves the physical corners to (computational corner + corner_grad) and
/// recomputes the physical geometry. Tangling is diagnosed separately, never
/// rejected here.
MeshPair update_physical_mesh(const MeshPair& pair, const VectorField& corner_grad);

} // namespace mamesh
