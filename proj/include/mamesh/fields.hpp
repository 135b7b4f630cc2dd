#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mamesh {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class FieldLocation { cell, face, corner };

/// One real value per cell (or per face when tagged so).
struct ScalarField {
    FieldLocation location = FieldLocation::cell;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(FieldLocation loc, std::size_t n, double init = 0.0)
        : location(loc), values(n, init) {}

    static ScalarField cells(std::size_t n, double init = 0.0) {
        return {FieldLocation::cell, n, init};
    }
    static ScalarField faces(std::size_t n, double init = 0.0) {
        return {FieldLocation::face, n, init};
    }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// One 2D vector per cell, face or corner.
struct VectorField {
    FieldLocation location = FieldLocation::cell;
    std::vector<Vec2> values;

    VectorField() = default;
    VectorField(FieldLocation loc, std::size_t n)
        : location(loc), values(n, Vec2::Zero()) {}

    static VectorField cells(std::size_t n) { return {FieldLocation::cell, n}; }
    static VectorField faces(std::size_t n) { return {FieldLocation::face, n}; }
    static VectorField corners(std::size_t n) { return {FieldLocation::corner, n}; }

    Vec2& operator[](std::size_t i) { return values[i]; }
    const Vec2& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// One 2x2 matrix per cell.
struct TensorField {
    std::vector<Mat2> values;

    TensorField() = default;
    explicit TensorField(std::size_t n) : values(n, Mat2::Zero()) {}

    Mat2& operator[](std::size_t i) { return values[i]; }
    const Mat2& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

} // namespace mamesh
