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

/// Largest dense problem the eigen-solvers accept.
inline constexpr std::size_t max_eigen_dimension = 16;

namespace detail {

// Parlett-Reinsch balancing with radix-2 scale factors (exact similarity).
inline void balance(Matrix& a) {
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    const std::size_t n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0)
                continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                const double ginv = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j)
                    a(i, j) *= ginv;
                for (std::size_t j = 0; j < n; ++j)
                    a(j, i) *= f;
            }
        }
    }
}

// Orthogonal reduction to upper Hessenberg form.
inline void hessenberg(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double xnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i)
            xnorm += a(i, k) * a(i, k);
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0)
            continue;
        const double alpha = a(k + 1, k) > 0.0 ? -xnorm : xnorm;
        std::vector<double> v(n - k - 1);
        for (std::size_t i = k + 1; i < n; ++i)
            v[i - k - 1] = a(i, k);
        v[0] -= alpha;
        double vnorm = 0.0;
        for (double e : v)
            vnorm += e * e;
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0.0)
            continue;
        for (double& e : v)
            e /= vnorm;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i)
                s += v[i - k - 1] * a(i, j);
            for (std::size_t i = k + 1; i < n; ++i)
                a(i, j) -= 2.0 * v[i - k - 1] * s;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j)
                s += a(i, j) * v[j - k - 1];
            for (std::size_t j = k + 1; j < n; ++j)
                a(i, j) -= 2.0 * s * v[j - k - 1];
        }
        for (std::size_t i = k + 2; i < n; ++i)
            a(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix (destroys h).
inline std::vector<Eigenvalue> hessenberg_qr(Matrix& h, int max_iterations_per_eigenvalue) {
    const int n = static_cast<int>(h.rows());
    std::vector<double> wr(static_cast<std::size_t>(n)), wi(static_cast<std::size_t>(n));
    auto a = [&h](int i, int j) -> double& { return h(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };
    auto sign = [](double x, double y) { return y >= 0.0 ? std::abs(x) : -std::abs(x); };

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j)
            anorm += std::abs(a(i, j));

    int nn = n - 1;
    double t = 0.0;
    double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 1; --l) {
                s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0)
                    s = anorm;
                if (std::abs(a(l, l - 1)) + s == s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            x = a(nn, nn);
            if (l == nn) {
                wr[static_cast<std::size_t>(nn)] = x + t;
                wi[static_cast<std::size_t>(nn)] = 0.0;
                --nn;
            } else {
                y = a(nn - 1, nn - 1);
                w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = std::sqrt(std::abs(q));
                    x += t;
                    const auto i1 = static_cast<std::size_t>(nn - 1);
                    const auto i2 = static_cast<std::size_t>(nn);
                    if (q >= 0.0) {
                        z = p + sign(z, p);
                        wr[i1] = wr[i2] = x + z;
                        if (z != 0.0)
                            wr[i2] = x - w / z;
                        wi[i1] = wi[i2] = 0.0;
                    } else {
                        wr[i1] = wr[i2] = x + p;
                        wi[i1] = z;
                        wi[i2] = -z;
                    }
                    nn -= 2;
                } else {
                    if (its == max_iterations_per_eigenvalue)
                        throw NoConvergence("eigenvalues: QR iteration did not converge within " +
                                            std::to_string(max_iterations_per_eigenvalue) + " iterations");
                    if (its > 0 && its % 10 == 0) {
                        // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i)
                            a(i, i) -= x;
                        s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l)
                            break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u + v == v)
                            break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2)
                            a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1)
                                r = a(k + 2, k - 1);
                            if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        if ((s = sign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
                            if (k == m) {
                                if (l != m)
                                    a(k, k - 1) = -a(k, k - 1);
                            } else {
                                a(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = a(k, j) + q * a(k + 1, j);
                                if (k != nn - 1) {
                                    p += r * a(k + 2, j);
                                    a(k + 2, j) -= p * z;
                                }
                                a(k + 1, j) -= p * y;
                                a(k, j) -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * a(i, k) + y * a(i, k + 1);
                                if (k != nn - 1) {
                                    p += z * a(i, k + 2);
                                    a(i, k + 2) -= p * r;
                                }
                                a(i, k + 1) -= p * q;
                                a(i, k) -= p;
                            }
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }

    std::vector<Eigenvalue> out(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = {wr[i], wi[i]};
    return out;
}

} // namespace detail

/// Sort by real part, keeping each conjugate pair adjacent (positive imaginary first).
inline void sort_eigenvalues(std::vector<Eigenvalue>& ev) {
    std::sort(ev.begin(), ev.end(), [](const Eigenvalue& a, const Eigenvalue& b) {
        if (a.real() != b.real())
            return a.real() < b.real();
        if (std::abs(a.imag()) != std::abs(b.imag()))
            return std::abs(a.imag()) < std::abs(b.imag());
        return a.imag() > b.imag();
    });
}

/**
 * All eigenvalues of a real square matrix (n <= 16).
 *
 * Balancing, Householder reduction to Hessenberg form, then Francis
 * double-shift QR. Complex eigenvalues come back as exact conjugate pairs.
 */
[[nodiscard]] inline std::vector<Eigenvalue> eigenvalues(const Matrix& a, int max_iterations_per_eigenvalue = 60) {
    if (!a.is_square())
        throw DimensionMismatch("eigenvalues: matrix is not square");
    if (a.rows() > max_eigen_dimension)
        throw DimensionMismatch("eigenvalues: dimension " + std::to_string(a.rows()) + " exceeds supported maximum " +
                                std::to_string(max_eigen_dimension));
    if (!a.all_finite())
        throw NonFiniteValue("eigenvalues: matrix has non-finite entries");
    Matrix h = a;
    detail::balance(h);
    detail::hessenberg(h);
    auto ev = detail::hessenberg_qr(h, max_iterations_per_eigenvalue);
    sort_eigenvalues(ev);
    return ev;
}

struct SymmetricEigen {
    std::vector<double> values; // ascending
    Matrix vectors;             // column j pairs with values[j]
};

/// Symmetry check used by the symmetric solver: ||a - a^T||_inf <= tol * ||a||_inf.
[[nodiscard]] inline bool is_symmetric(const Matrix& a, double rel_tol = 1e-9) {
    if (!a.is_square())
        return false;
    return (a - a.transpose()).inf_norm() <= rel_tol * a.inf_norm();
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
[[nodiscard]] inline SymmetricEigen symmetric_eigen(const Matrix& a_in, double symmetry_tol = 1e-9) {
    if (!a_in.is_square())
        throw DimensionMismatch("symmetric_eigenvalues: matrix is not square");
    if (a_in.rows() > max_eigen_dimension)
        throw DimensionMismatch("symmetric_eigenvalues: dimension exceeds supported maximum");
    if (!is_symmetric(a_in, symmetry_tol))
        throw NotSymmetric("symmetric_eigenvalues: ||a - a^T||_inf exceeds " + std::to_string(symmetry_tol) +
                           " * ||a||_inf");
    const std::size_t n = a_in.rows();
    Matrix a = a_in;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            a(i, j) = a(j, i) = 0.5 * (a_in(i, j) + a_in(j, i));
    Matrix v = Matrix::identity(n);

    const double scale = a.frobenius_norm();
    constexpr double eps = std::numeric_limits<double>::epsilon();
    bool converged = n == 1 || scale == 0.0;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= eps * scale) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged)
        throw NoConvergence("symmetric_eigenvalues: Jacobi sweeps did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i)
            out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

[[nodiscard]] inline std::vector<double> symmetric_eigenvalues(const Matrix& a, double symmetry_tol = 1e-9) {
    return symmetric_eigen(a, symmetry_tol).values;
}

/**
 * Worst relative distance between two eigenvalue multisets under the best
 * one-to-one pairing: min over pairings of max_i |actual_i - target_i| / |target_i|
 * (absolute distance where a target is zero). Exhaustive for up to 8 values.
 */
[[nodiscard]] inline double eigenvalue_set_mismatch(std::vector<Eigenvalue> actual, const std::vector<Eigenvalue>& target) {
    if (actual.size() != target.size())
        throw DimensionMismatch("eigenvalue_set_mismatch: set sizes differ");
    auto dist = [](const Eigenvalue& a, const Eigenvalue& t) {
        const double d = std::abs(a - t);
        return std::abs(t) > 0.0 ? d / std::abs(t) : d;
    };
    const std::size_t n = actual.size();
    if (n <= 8) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        double best = std::numeric_limits<double>::infinity();
        do {
            double worst = 0.0;
            for (std::size_t i = 0; i < n && worst < best; ++i)
                worst = std::max(worst, dist(actual[perm[i]], target[i]));
            best = std::min(best, worst);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    // greedy nearest matching for larger sets
    double worst = 0.0;
    for (const auto& t : target) {
        auto it = std::min_element(actual.begin(), actual.end(),
                                   [&](const Eigenvalue& x, const Eigenvalue& y) { return dist(x, t) < dist(y, t); });
        worst = std::max(worst, dist(*it, t));
        actual.erase(it);
    }
    return worst;
}

} // namespace afe
