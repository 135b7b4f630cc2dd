#pragma once

#include "mamesh/fields.hpp"

#include <vector>

namespace mamesh {

/// Radially symmetric monitor family m(x) = 1 + a1 sech^2(a2 (|x|^2 - a3^2)).
/// The mesh is drawn towards regions where m is large.
struct MonitorSpec {
    double alpha1 = 0.0;
    double alpha2 = 1.0;
    double alpha3 = 0.0;

    static MonitorSpec ring() { return {10.0, 200.0, 0.25}; }
    static MonitorSpec bell() { return {50.0, 100.0, 0.0}; }
    static MonitorSpec uniform() { return {0.0, 1.0, 0.0}; }

    /// m stays positive iff alpha1 > -1.
    void validate() const;
};

std::vector<double> eval_monitor(const MonitorSpec& spec, const std::vector<Vec2>& points);

/// Gradient of m: -4 a1 a2 sech^2(u) tanh(u) x with u = a2 (|x|^2 - a3^2).
std::vector<Vec2> monitor_grad_analytic(const MonitorSpec& spec,
                                        const std::vector<Vec2>& points);

} // namespace mamesh
