#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mamesh {

class InvalidMeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularGeometryError : public std::runtime_error {
public:
    SingularGeometryError(const std::string& what, int cell)
        : std::runtime_error(what), cell_id(cell) {}
    int cell_id;
};

class EllipticityLostError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TanglingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by a step when the iterate has left the basin where the update is
/// even computable (e.g. a negative Jacobian determinant under a square root).
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inner linear solve ran out of its iteration budget. Carries the residual
/// norms observed along the way so callers can log what happened.
class SolverStallError : public std::runtime_error {
public:
    SolverStallError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

} // namespace mamesh
