#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "afe/analysis.hpp"
#include "afe/error.hpp"
#include "afe/model.hpp"
#include "afe/numerics/decompositions.hpp"
#include "afe/numerics/eigen.hpp"
#include "afe/numerics/matrix.hpp"

namespace afe {

/**
 * Target closed-loop eigenvalues [rad/s].
 *
 * All real parts must be negative and complex targets must come in conjugate
 * pairs. Input order is preserved, except that each conjugate partner is moved
 * directly behind its positive-imaginary twin and made an exact conjugate.
 */
class PoleSpec {
  public:
    PoleSpec() = default;

    explicit PoleSpec(const std::vector<Eigenvalue>& poles) {
        if (poles.empty())
            throw InvalidPoleSpec("pole set is empty");
        std::vector<bool> used(poles.size(), false);
        for (std::size_t i = 0; i < poles.size(); ++i) {
            const Eigenvalue p = poles[i];
            if (!is_finite_scalar(p))
                throw InvalidPoleSpec("pole is not finite");
            if (!(p.real() < 0.0))
                throw InvalidPoleSpec("pole " + describe(p) + " is not in the open left half-plane");
        }
        for (std::size_t i = 0; i < poles.size(); ++i) {
            if (used[i])
                continue;
            used[i] = true;
            const Eigenvalue p = poles[i];
            if (is_real(p)) {
                poles_.emplace_back(p.real(), 0.0);
                continue;
            }
            std::size_t partner = poles.size();
            for (std::size_t j = i + 1; j < poles.size(); ++j) {
                if (!used[j] && std::abs(poles[j] - std::conj(p)) <= 1e-12 * std::abs(p)) {
                    partner = j;
                    break;
                }
            }
            if (partner == poles.size())
                throw InvalidPoleSpec("complex pole " + describe(p) + " has no conjugate partner");
            used[partner] = true;
            const Eigenvalue upper(p.real(), std::abs(p.imag()));
            poles_.push_back(upper);
            poles_.push_back(std::conj(upper));
        }
    }

    /// Current-loop pair at -w_i and voltage-loop pole at -w_v.
    [[nodiscard]] static PoleSpec from_bandwidths(const SystemSpecs& s) {
        return PoleSpec({{-s.omega_i(), 0.0}, {-s.omega_i(), 0.0}, {-s.omega_v(), 0.0}});
    }

    [[nodiscard]] PoleSpec scaled(double factor) const {
        std::vector<Eigenvalue> p = poles_;
        for (auto& v : p)
            v *= factor;
        return PoleSpec(p);
    }

    [[nodiscard]] const std::vector<Eigenvalue>& poles() const noexcept { return poles_; }
    [[nodiscard]] std::size_t size() const noexcept { return poles_.size(); }

    /// Largest number of targets that coincide (within 1e-9 relative).
    [[nodiscard]] std::size_t max_multiplicity() const {
        std::size_t best = 0;
        for (const auto& p : poles_) {
            const auto count = static_cast<std::size_t>(std::count_if(
                poles_.begin(), poles_.end(), [&](const Eigenvalue& q) { return coincide(p, q); }));
            best = std::max(best, count);
        }
        return best;
    }

    [[nodiscard]] static bool coincide(const Eigenvalue& a, const Eigenvalue& b) {
        return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
    }

  private:
    static bool is_real(const Eigenvalue& p) { return p.imag() == 0.0 || std::abs(p.imag()) <= 1e-14 * std::abs(p); }
    static std::string describe(const Eigenvalue& p) {
        return "(" + std::to_string(p.real()) + (p.imag() < 0 ? " - " : " + ") + std::to_string(std::abs(p.imag())) + "i)";
    }

    std::vector<Eigenvalue> poles_;
};

enum class GainProvenance { state_space, frequency_domain };

[[nodiscard]] inline const char* to_string(GainProvenance p) noexcept {
    return p == GainProvenance::state_space ? "state_space" : "frequency_domain";
}

/// State-feedback gain for u1 = -K x.
struct GainMatrix {
    Matrix k{2, 3};
    GainProvenance provenance = GainProvenance::state_space;
};

[[nodiscard]] inline Matrix closed_loop_matrix(const LinearModel& m, const Matrix& k) { return m.a - m.b1 * k; }

struct PlacementOptions {
    int max_sweeps = 100;
    /// Stop when |det X| (unit-norm eigenvector columns) changes by less than this, relatively.
    double det_tol = 1e-12;
};

namespace detail {

inline double abs_det_unit_columns(const ComplexMatrix& x) {
    const auto qr = pivoted_qr(x, 0.0);
    double d = 1.0;
    for (std::size_t k = 0; k < x.cols(); ++k)
        d *= std::abs(qr.r(k, k));
    return d;
}

inline std::vector<std::complex<double>> project(const std::vector<std::vector<std::complex<double>>>& basis,
                                                 const std::vector<std::complex<double>>& y) {
    std::vector<std::complex<double>> out(y.size());
    for (const auto& u : basis) {
        const auto c = inner<std::complex<double>>(u, y);
        for (std::size_t i = 0; i < y.size(); ++i)
            out[i] += c * u[i];
    }
    return out;
}

} // namespace detail

/**
 * Robust multi-input pole placement by eigenvector assignment.
 *
 * For each target lambda_j the admissible eigenvector subspace is
 * S_j = null(Q1^T (A - lambda_j I)), where B = [Q0 Q1] [Z; 0]. Eigenvectors are
 * chosen one at a time as the projection onto S_j of the direction orthogonal to
 * all other eigenvectors, sweeping until |det X| stalls (Kautsky-Nichols-Van Dooren
 * method 0). Conjugate targets get conjugate eigenvectors, so the gain is real.
 * Finally A_cl = X Lambda X^{-1} and K = Z^{-1} Q0^T (A - A_cl).
 */
[[nodiscard]] inline Matrix place_poles(const Matrix& a, const Matrix& b, const PoleSpec& spec, PlacementOptions opts = {}) {
    using cd = std::complex<double>;
    if (!a.is_square() || b.rows() != a.rows())
        throw DimensionMismatch("place_poles: incompatible a, b");
    const std::size_t n = a.rows();
    const std::size_t m = b.cols();
    const auto& poles = spec.poles();
    if (poles.size() != n)
        throw DimensionMismatch("place_poles: " + std::to_string(poles.size()) + " targets for a system of order " +
                                std::to_string(n));
    const std::size_t rank_b = numerical_rank(b);
    if (rank_b == 0)
        throw Uncontrollable("place_poles: input matrix is zero");
    if (rank_b < m)
        throw Uncontrollable("place_poles: input matrix does not have full column rank");
    if (controllability_rank(a, b) < n)
        throw Uncontrollable("place_poles: (A, B) is not controllable");
    if (spec.max_multiplicity() > rank_b)
        throw MultiplicityExceeded("place_poles: a target is repeated " + std::to_string(spec.max_multiplicity()) +
                                   " times but rank(B) = " + std::to_string(rank_b));

    // B P = Q R  =>  B = Q0 Z with Z = R(0:m, :) P^T
    const auto bqr = pivoted_qr(b, 0.0);
    Matrix q0 = bqr.q.block(0, 0, n, m);
    Matrix z(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            z(i, bqr.perm[j]) = bqr.r(i, j);

    const ComplexMatrix ac = to_complex(a);
    std::vector<std::vector<std::vector<cd>>> subspace(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (m == n) {
            for (std::size_t k = 0; k < n; ++k) {
                std::vector<cd> e(n);
                e[k] = 1.0;
                subspace[j].push_back(e);
            }
            continue;
        }
        const ComplexMatrix q1t = to_complex(bqr.q.block(0, m, n, n - m).transpose());
        ComplexMatrix shifted = ac;
        for (std::size_t k = 0; k < n; ++k)
            shifted(k, k) -= poles[j];
        subspace[j] = null_space(q1t * shifted);
        if (subspace[j].empty())
            throw Uncontrollable("place_poles: empty admissible eigenvector subspace");
    }

    auto is_partner = [&](std::size_t j) { return j > 0 && poles[j].imag() < 0.0; };

    // initial eigenvectors: projection of a coordinate direction, falling back
    // to a subspace basis vector not yet used by a coinciding target
    ComplexMatrix x(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        if (is_partner(j))
            continue;
        std::vector<cd> e(n);
        e[j] = 1.0;
        auto v = detail::project(subspace[j], e);
        double nv = vector_norm<cd>(v);
        if (nv < 1e-3) {
            std::size_t copies = 0;
            for (std::size_t i = 0; i < j; ++i)
                if (PoleSpec::coincide(poles[i], poles[j]))
                    ++copies;
            v = subspace[j][copies % subspace[j].size()];
            nv = vector_norm<cd>(v);
        }
        for (std::size_t i = 0; i < n; ++i)
            x(i, j) = v[i] / nv;
        if (j + 1 < n && is_partner(j + 1))
            for (std::size_t i = 0; i < n; ++i)
                x(i, j + 1) = std::conj(x(i, j));
    }

    if (n > 1) {
        double det_prev = detail::abs_det_unit_columns(x);
        for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
            for (std::size_t j = 0; j < n; ++j) {
                if (is_partner(j))
                    continue;
                ComplexMatrix others(n, n - 1);
                for (std::size_t c = 0, k = 0; c < n; ++c) {
                    if (c == j)
                        continue;
                    for (std::size_t i = 0; i < n; ++i)
                        others(i, k) = x(i, c);
                    ++k;
                }
                const auto comp = orthogonal_complement(others);
                std::vector<cd> best;
                double best_norm = 0.0;
                for (const auto& y : comp) {
                    auto v = detail::project(subspace[j], y);
                    if (const double nv = vector_norm<cd>(v); nv > best_norm) {
                        best_norm = nv;
                        best = std::move(v);
                    }
                }
                if (best_norm < 1e-14)
                    continue;
                for (std::size_t i = 0; i < n; ++i)
                    x(i, j) = best[i] / best_norm;
                if (j + 1 < n && is_partner(j + 1))
                    for (std::size_t i = 0; i < n; ++i)
                        x(i, j + 1) = std::conj(x(i, j));
            }
            const double det_now = detail::abs_det_unit_columns(x);
            const bool stalled = std::abs(det_now - det_prev) <= opts.det_tol * std::max(det_now, 1e-300);
            det_prev = det_now;
            if (stalled)
                break;
        }
    }

    // A_cl = X Lambda X^{-1}  <=>  X^T A_cl^T = (X Lambda)^T
    ComplexMatrix x_lambda = x;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            x_lambda(i, j) *= poles[j];
    ComplexMatrix acl_t(n, n);
    try {
        acl_t = lu_solve(x.transpose(), x_lambda.transpose());
    } catch (const SingularMatrix&) {
        throw Uncontrollable("place_poles: could not assign an independent set of closed-loop eigenvectors");
    }
    const Matrix a_cl = real_part(acl_t.transpose());
    return lu_solve(z, q0.transpose() * (a - a_cl));
}

/// Two-input AFE placement on (A, B1).
[[nodiscard]] inline GainMatrix place_poles(const LinearModel& model, const PoleSpec& spec, PlacementOptions opts = {}) {
    return {place_poles(model.a, model.b1, spec, opts), GainProvenance::state_space};
}

/// Proportional gains of the decoupled first-order current loops and the cascaded voltage loop.
struct FdGains {
    double k_iq = 0.0; ///< q-current loop, w_i L
    double k_id = 0.0; ///< d-current loop, (w_i + w_v) L
    double k_v = 0.0;  ///< voltage loop, w_i w_v C / (w_i + w_v)
};

[[nodiscard]] inline FdGains fd_gains(const SystemSpecs& s) {
    const double wi = s.omega_i();
    const double wv = s.omega_v();
    if (!(wi > 0.0) || !(wv >= 0.0))
        throw InvalidSpecs("fd_gains: loop bandwidths must be positive");
    return {wi * s.l_in, (wi + wv) * s.l_in, wi * wv * s.c_dc / (wi + wv)};
}

/**
 * Frequency-domain design collapsed into a static gain on [i_gd, i_gq, v_dc]
 * with both references at zero.
 *
 * k22 is taken as (r - K_iq)/V_dc: this is the sign that makes the q-loop
 * diagonal entry of A - B1 K equal to -K_iq/L, i.e. a stable pole at -w_i.
 */
[[nodiscard]] inline GainMatrix fd_gain_matrix(const SystemSpecs& s, const OperatingPoint& op) {
    const FdGains g = fd_gains(s);
    const double vdc = op.v_dc;
    const double r = s.r_s;
    const double wl = s.omega_0() * s.l_in;
    const double den = op.m_d * vdc - op.i_gd * r;
    if (den == 0.0 || std::abs(den) <= 1e-12 * (std::abs(op.m_d * vdc) + std::abs(op.i_gd * r)))
        throw DegenerateOperatingPoint("fd_gain_matrix: M_d V_dc - I_gd r vanishes; the voltage-loop gain k13 is undefined");
    const double k13 = op.m_d / vdc -
                       (2.0 * g.k_id * vdc * (g.k_v - load_conductance(s)) - 3.0 * g.k_id * op.i_gd * op.m_d) / (3.0 * vdc * den);
    GainMatrix out;
    out.provenance = GainProvenance::frequency_domain;
    out.k = Matrix{
        {(r - g.k_id) / vdc, -wl / vdc, k13},
        {wl / vdc, (r - g.k_iq) / vdc, op.m_q / vdc},
    };
    return out;
}

/// Floor in the denominator of the per-entry relative difference.
inline constexpr double gain_comparison_floor = 1e-12;

struct GainComparison {
    Matrix relative_difference;
    double max_relative_difference = 0.0;
    std::size_t worst_row = 0;
    std::size_t worst_col = 0;
};

/// Per-entry |k1 - k2| / max(|k1|, |k2|, floor).
[[nodiscard]] inline GainComparison compare_gains(const Matrix& k1, const Matrix& k2, double floor = gain_comparison_floor) {
    if (k1.rows() != k2.rows() || k1.cols() != k2.cols())
        throw DimensionMismatch("compare_gains: gain matrices have different shapes");
    GainComparison out{Matrix(k1.rows(), k1.cols())};
    for (std::size_t i = 0; i < k1.rows(); ++i)
        for (std::size_t j = 0; j < k1.cols(); ++j) {
            const double d = std::abs(k1(i, j) - k2(i, j)) / std::max({std::abs(k1(i, j)), std::abs(k2(i, j)), floor});
            out.relative_difference(i, j) = d;
            if (d > out.max_relative_difference) {
                out.max_relative_difference = d;
                out.worst_row = i;
                out.worst_col = j;
            }
        }
    return out;
}

[[nodiscard]] inline GainComparison compare_gains(const GainMatrix& k1, const GainMatrix& k2,
                                                  double floor = gain_comparison_floor) {
    return compare_gains(k1.k, k2.k, floor);
}

} // namespace afe
