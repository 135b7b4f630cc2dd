#pragma once

#include "mamesh/fvops.hpp"
#include "mamesh/geometry.hpp"
#include "mamesh/solvers.hpp"

#include <cmath>
#include <map>
#include <random>
#include <string>

namespace testutil {

using namespace mamesh;

inline ScalarField sample_cells(const Mesh& m, double (*f)(double, double)) {
    ScalarField out = ScalarField::cells(m.cell_count());
    for (int c = 0; c < m.cell_count(); ++c)
        out[c] = f(m.cell_centres[c].x(), m.cell_centres[c].y());
    return out;
}

/// Band-limited periodic field: random Fourier modes up to |k| <= kmax with
/// coefficients of size ~amp. Deterministic for a given rng state.
inline ScalarField random_smooth(const Mesh& m, std::mt19937& rng, double amp,
                                 int kmax) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    struct Mode {
        int kx, ky;
        double a, b;
    };
    std::vector<Mode> modes;
    for (int kx = -kmax; kx <= kmax; ++kx)
        for (int ky = 0; ky <= kmax; ++ky) {
            if (kx == 0 && ky == 0) continue;
            if (ky == 0 && kx < 0) continue;
            modes.push_back({kx, ky, amp * unif(rng), amp * unif(rng)});
        }
    ScalarField f = ScalarField::cells(m.cell_count());
    for (int c = 0; c < m.cell_count(); ++c) {
        const Vec2 x = m.cell_centres[c];
        double v = 0.0;
        for (const Mode& md : modes) {
            const double arg = 2.0 * M_PI * (md.kx * x.x() + md.ky * x.y());
            v += md.a * std::cos(arg) + md.b * std::sin(arg);
        }
        f[c] = v;
    }
    return f;
}

/// Periodic corner displacement field for building distorted physical meshes.
inline VectorField smooth_corner_displacement(const Mesh& m, double amp) {
    VectorField d = VectorField::corners(m.corner_count());
    for (int c = 0; c < m.corner_count(); ++c) {
        const Vec2 p = m.corners[c];
        d[c] = amp * Vec2(std::sin(2 * M_PI * p.x()) * std::cos(2 * M_PI * p.y()),
                          std::cos(2 * M_PI * p.x()) * std::sin(4 * M_PI * p.y()));
    }
    return d;
}

inline double observed_order(double err_coarse, double err_fine) {
    return std::log2(err_coarse / err_fine);
}

/// Memoised solver runs shared between test cases of one binary.
inline const RunResult& cached_run(Algorithm alg, const MonitorSpec& mon,
                                   const std::string& mon_name, int n,
                                   const SolverConfig* base = nullptr) {
    static std::map<std::string, RunResult> cache;
    SolverConfig cfg;
    if (base) cfg = *base;
    cfg.algorithm = alg;
    const std::string key = to_string(alg) + "_" + mon_name + "_" + std::to_string(n) +
                            "_" + std::to_string(cfg.fp_gamma) + "_" +
                            std::to_string(cfg.pma_gamma) + "_" +
                            std::to_string(cfg.pma_dt) + "_" +
                            std::to_string(cfg.lin.correctors) + "_" +
                            std::to_string(cfg.lin.pin_cell);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, run(cfg, mon, n)).first;
    return it->second;
}

} // namespace testutil
