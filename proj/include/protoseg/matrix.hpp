#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "protoseg/errors.hpp"

namespace protoseg {

// Dense row-major matrix of doubles. The workhorse container for embedding
// batches, similarity matrices and layer weights.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw InvalidShapeError("Matrix: negative dimension");
    }
    Matrix(int rows, int cols, std::vector<double> data)
        : rows_(rows), cols_(cols), a_(std::move(data)) {
        if (a_.size() != static_cast<size_t>(rows) * cols)
            throw InvalidShapeError("Matrix: data size does not match rows*cols");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return a_.empty(); }

    double& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return a_[static_cast<size_t>(r) * cols_ + c]; }

    std::span<double> row(int r) { return {a_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
    std::span<const double> row(int r) const {
        return {a_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
    }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    size_t size() const { return a_.size(); }

    bool operator==(const Matrix& o) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) {
    return std::sqrt(dot(x, x));
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

inline bool all_finite(const Matrix& m) {
    for (size_t i = 0; i < m.size(); ++i)
        if (!std::isfinite(m.data()[i])) return false;
    return true;
}

}  // namespace protoseg
