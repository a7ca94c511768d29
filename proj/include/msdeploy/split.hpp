#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "msdeploy/errors.hpp"
#include "msdeploy/matrix.hpp"

namespace msdeploy {

/// Difference-of-convex split Q = P - N with P = Q + lambda_q I and
/// N = lambda_q I, where lambda_q upper-bounds the spectral radius of Q.
struct SplitMatrices {
    Matrix P;
    double lambda_q = 0.0;
    std::size_t dim = 0;

    Matrix n_mat() const {
        Matrix n(dim, dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) n(i, i) = lambda_q;
        return n;
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace detail

/// Spectral-radius upper bound via safeguarded power iteration (norm-growth
/// estimate, 200 iterations or 1e-10 relative change, then a 1% inflation),
/// clamped by the Gershgorin row-sum bound. Over-estimation only loosens the
/// majorizer, so the safeguards err upward.
inline SplitMatrices split_matrix(const Matrix& q_in) {
    if (q_in.rows() != q_in.cols()) throw DimensionMismatch("split_matrix: matrix not square");
    if (!q_in.all_finite()) throw NonFiniteEntries("split_matrix: non-finite entries");
    const std::size_t n = q_in.rows();

    // symmetrize defensively; callers pass W + W^T which is already symmetric
    Matrix q(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) q(r, c) = 0.5 * (q_in(r, c) + q_in(c, r));

    double gershgorin = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < n; ++c) row += std::fabs(q(r, c));
        gershgorin = std::max(gershgorin, row);
    }

    double lambda = 0.0;
    if (gershgorin > 0.0) {
        std::vector<double> v(n);
        std::uint64_t state = 0x5DEECE66Dull;
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = 0.5 + static_cast<double>(detail::splitmix64(state) >> 40) * 0x1p-24;
            norm += v[i] * v[i];
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;

        double prev = 0.0;
        bool converged = false;
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<double> w = mat_vec(q, v);
            double wn = 0.0;
            for (double x : w) wn += x * x;
            wn = std::sqrt(wn);
            if (wn == 0.0) break;  // v fell into the null space; keep last estimate
            lambda = wn;
            for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
            if (std::fabs(lambda - prev) <= 1e-10 * std::max(1.0, lambda)) {
                converged = true;
                break;
            }
            prev = lambda;
        }
        lambda = converged ? std::min(lambda * 1.01, gershgorin) : gershgorin;
    }

    SplitMatrices s;
    s.dim = n;
    s.lambda_q = lambda;
    s.P = std::move(q);
    for (std::size_t i = 0; i < n; ++i) s.P(i, i) += lambda;
    return s;
}

} // namespace msdeploy
