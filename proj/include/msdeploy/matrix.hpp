#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "msdeploy/errors.hpp"

namespace msdeploy {

/// Dense row-major matrix of doubles. Just enough linear algebra for the
/// vectorized model; not a general-purpose library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

    const std::vector<double>& data() const { return a_; }

    bool all_finite() const {
        for (double v : a_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

inline std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
    if (v.size() != m.cols()) throw DimensionMismatch("mat_vec: size mismatch");
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) acc += m(r, c) * v[c];
        out[r] = acc;
    }
    return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// x^T A x for square A.
inline double quad_form(const Matrix& a, const std::vector<double>& x) {
    if (a.rows() != a.cols() || x.size() != a.rows())
        throw DimensionMismatch("quad_form: size mismatch");
    double acc = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) row += a(r, c) * x[c];
        acc += x[r] * row;
    }
    return acc;
}

} // namespace msdeploy
