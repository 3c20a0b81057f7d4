#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "afe/error.hpp"
#include "afe/numerics/matrix.hpp"

namespace afe {

// ---------------------------------------------------------------------------
// LU with partial pivoting
// ---------------------------------------------------------------------------

/// Relative pivot threshold: a pivot below pivot_tol * ||a||_inf is singular.
inline constexpr double default_pivot_tol = 1e-12;

/**
 * Solve a * X = b for X with Gaussian elimination and partial pivoting.
 *
 * Throws SingularMatrix when a pivot magnitude drops below
 * pivot_tol * ||a||_inf.
 */
template<typename T>
[[nodiscard]] BasicMatrix<T> lu_solve(const BasicMatrix<T>& a, const BasicMatrix<T>& b, double pivot_tol = default_pivot_tol) {
    if (!a.is_square())
        throw DimensionMismatch("lu_solve: coefficient matrix is not square");
    if (b.rows() != a.rows())
        throw DimensionMismatch("lu_solve: right-hand side has " + std::to_string(b.rows()) + " rows, expected " +
                                std::to_string(a.rows()));
    const std::size_t n = a.rows();
    const std::size_t k = b.cols();
    const double threshold = pivot_tol * static_cast<double>(a.inf_norm());

    BasicMatrix<T> lu = a;
    BasicMatrix<T> x = b;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        double best = std::abs(lu(c, c));
        for (std::size_t r = c + 1; r < n; ++r) {
            if (const double v = std::abs(lu(r, c)); v > best) {
                best = v;
                piv = r;
            }
        }
        if (!(best > threshold) || best == 0.0)
            throw SingularMatrix("lu_solve: pivot " + std::to_string(best) + " in column " + std::to_string(c) +
                                 " is below threshold; matrix is numerically singular");
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(lu(c, j), lu(piv, j));
            for (std::size_t j = 0; j < k; ++j)
                std::swap(x(c, j), x(piv, j));
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const T f = lu(r, c) / lu(c, c);
            if (f == T{})
                continue;
            lu(r, c) = T{};
            for (std::size_t j = c + 1; j < n; ++j)
                lu(r, j) -= f * lu(c, j);
            for (std::size_t j = 0; j < k; ++j)
                x(r, j) -= f * x(c, j);
        }
    }
    for (std::size_t cc = n; cc-- > 0;) {
        for (std::size_t j = 0; j < k; ++j) {
            T s = x(cc, j);
            for (std::size_t m = cc + 1; m < n; ++m)
                s -= lu(cc, m) * x(m, j);
            x(cc, j) = s / lu(cc, cc);
        }
    }
    return x;
}

template<typename T>
[[nodiscard]] BasicMatrix<T> inverse(const BasicMatrix<T>& a, double pivot_tol = default_pivot_tol) {
    return lu_solve(a, BasicMatrix<T>::identity(a.rows()), pivot_tol);
}

// ---------------------------------------------------------------------------
// Householder QR with column pivoting (real or complex)
// ---------------------------------------------------------------------------

template<typename T>
struct QrDecomposition {
    BasicMatrix<T> q;              // rows x rows, unitary
    BasicMatrix<T> r;              // rows x cols, upper trapezoidal (pivoted column order)
    std::vector<std::size_t> perm; // r column j is input column perm[j]
    std::size_t rank = 0;
};

/// Pivoted QR: a(:, perm) = q * r. Rank counts |r_kk| > rank_tol * |r_00|.
template<typename T>
[[nodiscard]] QrDecomposition<T> pivoted_qr(const BasicMatrix<T>& a, double rank_tol = 1e-10) {
    using std::abs;
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    BasicMatrix<T> r = a;
    BasicMatrix<T> q = BasicMatrix<T>::identity(m);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});

    const std::size_t steps = std::min(m, n);
    for (std::size_t k = 0; k < steps; ++k) {
        // pick remaining column of largest norm
        std::size_t best_col = k;
        double best_norm = -1.0;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i)
                s += std::norm(r(i, j));
            if (s > best_norm) {
                best_norm = s;
                best_col = j;
            }
        }
        if (best_col != k) {
            for (std::size_t i = 0; i < m; ++i)
                std::swap(r(i, k), r(i, best_col));
            std::swap(perm[k], perm[best_col]);
        }

        const double xnorm = std::sqrt(best_norm);
        if (xnorm == 0.0)
            continue;
        T phase{1};
        if (abs(r(k, k)) != 0.0)
            phase = r(k, k) / static_cast<T>(abs(r(k, k)));
        const T alpha = -phase * static_cast<T>(xnorm);

        std::vector<T> v(m - k);
        for (std::size_t i = k; i < m; ++i)
            v[i - k] = r(i, k);
        v[0] -= alpha;
        const double vnorm = vector_norm<T>(v);
        if (vnorm == 0.0)
            continue;
        for (auto& e : v)
            e /= static_cast<T>(vnorm);

        // r <- (I - 2 v v^H) r on rows k..m-1
        for (std::size_t j = k; j < n; ++j) {
            T s{};
            for (std::size_t i = k; i < m; ++i)
                s += conj_if_complex(v[i - k]) * r(i, j);
            s *= T{2};
            for (std::size_t i = k; i < m; ++i)
                r(i, j) -= v[i - k] * s;
        }
        // q <- q (I - 2 v v^H) on columns k..m-1
        for (std::size_t i = 0; i < m; ++i) {
            T s{};
            for (std::size_t l = k; l < m; ++l)
                s += q(i, l) * v[l - k];
            s *= T{2};
            for (std::size_t l = k; l < m; ++l)
                q(i, l) -= s * conj_if_complex(v[l - k]);
        }
        for (std::size_t i = k + 1; i < m; ++i)
            r(i, k) = T{};
    }

    std::size_t rank = 0;
    const double lead = steps > 0 ? std::abs(r(0, 0)) : 0.0;
    if (lead > 0.0)
        for (std::size_t k = 0; k < steps; ++k)
            if (std::abs(r(k, k)) > rank_tol * lead)
                ++rank;
    return {std::move(q), std::move(r), std::move(perm), rank};
}

/// Orthonormal basis of the orthogonal complement of span(columns of x).
template<typename T>
[[nodiscard]] std::vector<std::vector<T>> orthogonal_complement(const BasicMatrix<T>& x, double rank_tol = 1e-10) {
    const auto qr = pivoted_qr(x, rank_tol);
    std::vector<std::vector<T>> basis;
    for (std::size_t j = qr.rank; j < x.rows(); ++j)
        basis.push_back(qr.q.col(j));
    return basis;
}

/// Orthonormal basis of the (right) null space of m.
template<typename T>
[[nodiscard]] std::vector<std::vector<T>> null_space(const BasicMatrix<T>& m, double rank_tol = 1e-10) {
    return orthogonal_complement(m.adjoint(), rank_tol);
}

// ---------------------------------------------------------------------------
// Singular values and numerical rank
// ---------------------------------------------------------------------------

/// Singular values in descending order (one-sided Jacobi).
[[nodiscard]] inline std::vector<double> singular_values(const Matrix& a) {
    Matrix w = a.rows() >= a.cols() ? a : a.transpose();
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    constexpr double eps = std::numeric_limits<double>::epsilon();

    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    alpha += w(k, i) * w(k, i);
                    beta += w(k, j) * w(k, j);
                    gamma += w(k, i) * w(k, j);
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < m; ++k) {
                    const double wi = w(k, i);
                    const double wj = w(k, j);
                    w(k, i) = c * wi - s * wj;
                    w(k, j) = s * wi + c * wj;
                }
            }
        }
        if (!rotated)
            break;
    }
    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            s += w(k, j) * w(k, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

/// Multiplier applied to max(rows, cols) * machine epsilon for the default rank threshold.
inline constexpr double rank_safety_factor = 1e3;

struct RankOptions {
    /// sigma_i counts when sigma_i > relative_tol * sigma_max; negative selects the default.
    double relative_tol = -1.0;
    /// Scale every nonzero column to unit norm first. Controllability matrices mix
    /// columns that differ by many orders of magnitude; without this, small but
    /// perfectly independent columns fall under the threshold.
    bool normalize_columns = true;
};

[[nodiscard]] inline double default_rank_tolerance(const Matrix& a) {
    return static_cast<double>(std::max(a.rows(), a.cols())) * std::numeric_limits<double>::epsilon() *
           rank_safety_factor;
}

[[nodiscard]] inline std::size_t numerical_rank(const Matrix& a, RankOptions opts = {}) {
    Matrix w = a;
    if (opts.normalize_columns) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < w.rows(); ++i)
                s += w(i, j) * w(i, j);
            if (s == 0.0)
                continue;
            const double inv = 1.0 / std::sqrt(s);
            for (std::size_t i = 0; i < w.rows(); ++i)
                w(i, j) *= inv;
        }
    }
    const auto sv = singular_values(w);
    if (sv.empty() || sv.front() == 0.0)
        return 0;
    const double tol = opts.relative_tol < 0.0 ? default_rank_tolerance(a) : opts.relative_tol;
    return static_cast<std::size_t>(
        std::count_if(sv.begin(), sv.end(), [&](double s) { return s > tol * sv.front(); }));
}

} // namespace afe
