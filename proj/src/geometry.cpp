#include "mamesh/geometry.hpp"

#include "mamesh/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace mamesh {

namespace {

// -90 degree rotation: maps the edge tangent to the owner->neighbour normal.
Vec2 perp(const Vec2& t) { return {t.y(), -t.x()}; }

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace

double Mesh::total_volume() const {
    return std::accumulate(cell_volumes.begin(), cell_volumes.end(), 0.0);
}

Mesh build_uniform_mesh(int n) {
    if (n < 3) {
        throw InvalidMeshError("mesh needs at least 3 cells per side, got " +
                               std::to_string(n));
    }

    Mesh m;
    m.n = n;
    const double h = 1.0 / n;
    const int nc = n * n;

    m.corners.resize(nc);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            m.corners[j * n + i] = Vec2(-0.5 + i * h, -0.5 + j * h);

    m.cell_corners.resize(nc);
    m.cell_corner_shifts.resize(nc);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int c = j * n + i;
            const int ip = (i + 1) % n;
            const int jp = (j + 1) % n;
            const Vec2 sx = (i + 1 == n) ? Vec2(1, 0) : Vec2(0, 0);
            const Vec2 sy = (j + 1 == n) ? Vec2(0, 1) : Vec2(0, 0);
            m.cell_corners[c] = {j * n + i, j * n + ip, jp * n + ip, jp * n + i};
            m.cell_corner_shifts[c] = {Vec2(0, 0), sx, sx + sy, sy};
        }
    }

    // Vertical faces sit on corner column i and separate cell (i-1,j) from
    // (i,j); horizontal faces sit on corner row j and separate (i,j-1) from
    // (i,j). Wrap faces keep their geometry in the owner's frame, one period
    // over from the stored corners.
    m.faces.resize(2 * nc);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            Face& f = m.faces[j * n + i];
            const int im = (i - 1 + n) % n;
            const int jp = (j + 1) % n;
            f.owner = j * n + im;
            f.neighbour = j * n + i;
            f.horizontal = false;
            f.endpoints = {j * n + i, jp * n + i};
            const Vec2 wrap_x = (i == 0) ? Vec2(1, 0) : Vec2(0, 0);
            const Vec2 wrap_y = (j + 1 == n) ? Vec2(0, 1) : Vec2(0, 0);
            f.endpoint_shift = {wrap_x, wrap_x + wrap_y};
            f.neighbour_shift = wrap_x;
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            Face& f = m.faces[nc + j * n + i];
            const int jm = (j - 1 + n) % n;
            const int ip = (i + 1) % n;
            f.owner = jm * n + i;
            f.neighbour = j * n + i;
            f.horizontal = true;
            // ordered right-to-left so that perp() points from owner (+y)
            f.endpoints = {j * n + ip, j * n + i};
            const Vec2 wrap_y = (j == 0) ? Vec2(0, 1) : Vec2(0, 0);
            const Vec2 wrap_x = (i + 1 == n) ? Vec2(1, 0) : Vec2(0, 0);
            f.endpoint_shift = {wrap_y + wrap_x, wrap_y};
            f.neighbour_shift = wrap_y;
        }
    }

    m.cell_face_ids.resize(nc);
    m.cell_face_signs.resize(nc);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int c = j * n + i;
            const int west = j * n + i;
            const int east = j * n + (i + 1) % n;
            const int south = nc + j * n + i;
            const int north = nc + ((j + 1) % n) * n + i;
            m.cell_face_ids[c] = {west, east, south, north};
            m.cell_face_signs[c] = {-1, +1, -1, +1};
        }
    }

    m.corner_vfaces.resize(nc);
    m.corner_hfaces.resize(nc);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int c = j * n + i;
            const int jm = (j - 1 + n) % n;
            const int im = (i - 1 + n) % n;
            m.corner_vfaces[c] = {jm * n + i, j * n + i};
            m.corner_hfaces[c] = {nc + j * n + im, nc + j * n + i};
        }
    }

    recompute_geometry(m);
    // exact midpoint interpolation on the uniform grid
    for (Face& f : m.faces) f.owner_weight = 0.5;
    return m;
}

void recompute_geometry(Mesh& m) {
    const int nc = m.cell_count();
    m.cell_centres.resize(nc);
    m.cell_volumes.resize(nc);

    for (int c = 0; c < nc; ++c) {
        std::array<Vec2, 4> p;
        for (int k = 0; k < 4; ++k)
            p[k] = m.corners[m.cell_corners[c][k]] + m.cell_corner_shifts[c][k];
        m.cell_centres[c] = 0.25 * (p[0] + p[1] + p[2] + p[3]);
        // shoelace via the two triangles of the (p0,p2) diagonal
        m.cell_volumes[c] =
            0.5 * (cross2(p[1] - p[0], p[2] - p[0]) + cross2(p[2] - p[0], p[3] - p[0]));
    }

    for (Face& f : m.faces) {
        const Vec2 p1 = m.corners[f.endpoints[0]] + f.endpoint_shift[0];
        const Vec2 p2 = m.corners[f.endpoints[1]] + f.endpoint_shift[1];
        f.area = perp(p2 - p1);
        f.centre = 0.5 * (p1 + p2);
        const Vec2 xo = m.cell_centres[f.owner];
        const Vec2 xn = m.cell_centres[f.neighbour] + f.neighbour_shift;
        f.d = xn - xo;
        const double to_owner = (f.centre - xo).norm();
        const double to_neigh = (f.centre - xn).norm();
        const double total = to_owner + to_neigh;
        f.owner_weight = total > 0.0 ? to_neigh / total : 0.5;
    }
}

TanglingReport tangling_check(const Mesh& m) {
    TanglingReport rep;
    rep.min_cell_volume = std::numeric_limits<double>::max();
    rep.min_triangle_area = std::numeric_limits<double>::max();
    for (int c = 0; c < m.cell_count(); ++c) {
        std::array<Vec2, 4> p;
        for (int k = 0; k < 4; ++k)
            p[k] = m.corners[m.cell_corners[c][k]] + m.cell_corner_shifts[c][k];
        const double t1 = 0.5 * cross2(p[1] - p[0], p[2] - p[0]);
        const double t2 = 0.5 * cross2(p[2] - p[0], p[3] - p[0]);
        rep.min_triangle_area = std::min({rep.min_triangle_area, t1, t2});
        rep.min_cell_volume = std::min(rep.min_cell_volume, m.cell_volumes[c]);
    }
    rep.tangled = rep.min_triangle_area <= 0.0;
    return rep;
}

MeshPair make_mesh_pair(int n) {
    MeshPair pair;
    pair.computational = build_uniform_mesh(n);
    pair.physical = pair.computational;
    pair.corner_displacement = VectorField::corners(pair.computational.corner_count());
    return pair;
}

MeshPair update_physical_mesh(const MeshPair& pair, const VectorField& corner_grad) {
    const Mesh& comp = pair.computational;
    if (corner_grad.location != FieldLocation::corner ||
        corner_grad.size() != static_cast<std::size_t>(comp.corner_count())) {
        throw InvalidMeshError("corner gradient does not match the mesh corners");
    }
    MeshPair out;
    out.computational = comp;
    out.physical = comp;
    for (int c = 0; c < comp.corner_count(); ++c)
        out.physical.corners[c] = comp.corners[c] + corner_grad[c];
    recompute_geometry(out.physical);
    out.corner_displacement = corner_grad;
    return out;
}

} // namespace mamesh
