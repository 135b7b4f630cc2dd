#include "mamesh/monitor.hpp"

#include "mamesh/errors.hpp"

#include <cmath>
#include <string>

namespace mamesh {

namespace {

double sech(double u) { return 1.0 / std::cosh(u); }

} // namespace

void MonitorSpec::validate() const {
    if (!(alpha1 > -1.0)) {
        throw ConfigError("monitor alpha1 must be > -1 to keep m positive, got " +
                          std::to_string(alpha1));
    }
}

std::vector<double> eval_monitor(const MonitorSpec& spec, const std::vector<Vec2>& points) {
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double u = spec.alpha2 * (points[i].squaredNorm() - spec.alpha3 * spec.alpha3);
        const double s = sech(u);
        out[i] = 1.0 + spec.alpha1 * s * s;
    }
    return out;
}

std::vector<Vec2> monitor_grad_analytic(const MonitorSpec& spec,
                                        const std::vector<Vec2>& points) {
    std::vector<Vec2> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double u = spec.alpha2 * (points[i].squaredNorm() - spec.alpha3 * spec.alpha3);
        const double s = sech(u);
        out[i] = (-4.0 * spec.alpha1 * spec.alpha2 * s * s * std::tanh(u)) * points[i];
    }
    return out;
}

} // namespace mamesh
