#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "afe/analysis.hpp"
#include "afe/control.hpp"
#include "afe/error.hpp"
#include "afe/model.hpp"
#include "afe/numerics/decompositions.hpp"
#include "afe/numerics/matrix.hpp"

namespace afe {

/// Real coefficients [1, c1, ..., cn] of prod (s - p_i).
[[nodiscard]] inline std::vector<double> characteristic_coefficients(const std::vector<Eigenvalue>& poles) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& p : poles) {
        std::vector<std::complex<double>> next(c.size() + 1);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k] += c[k];
            next[k + 1] -= p * c[k];
        }
        c = std::move(next);
    }
    std::vector<double> out(c.size());
    for (std::size_t k = 0; k < c.size(); ++k)
        out[k] = c[k].real();
    return out;
}

/// phi(A) = A^n + c1 A^{n-1} + ... + cn I, by Horner's rule.
[[nodiscard]] inline Matrix characteristic_polynomial_of(const Matrix& a, const std::vector<Eigenvalue>& poles) {
    const auto coeff = characteristic_coefficients(poles);
    const std::size_t n = a.rows();
    Matrix p = Matrix::identity(n);
    for (std::size_t k = 1; k < coeff.size(); ++k)
        p = p * a + Matrix::identity(n) * coeff[k];
    return p;
}

/**
 * Single-input Ackermann placement: returns the 1 x n row k with
 * eig(A - b k) = poles, k = e_n^T [b, Ab, ..., A^{n-1} b]^{-1} phi(A).
 * Repeated targets of any multiplicity are allowed.
 */
[[nodiscard]] inline Matrix ackermann(const Matrix& a, const Matrix& b, const PoleSpec& spec) {
    const std::size_t n = a.rows();
    if (!a.is_square() || b.rows() != n || b.cols() != 1)
        throw DimensionMismatch("ackermann: needs square a and a single input column");
    if (spec.size() != n)
        throw DimensionMismatch("ackermann: number of targets differs from system order");
    const Matrix ctrb = controllability_matrix(a, b);
    if (numerical_rank(ctrb) < n)
        throw Uncontrollable("ackermann: (A, b) is not controllable");
    Matrix e_n(n, 1);
    e_n(n - 1, 0) = 1.0;
    const Matrix v = lu_solve(ctrb.transpose(), e_n);
    return v.transpose() * characteristic_polynomial_of(a, spec.poles());
}

/// Luenberger output-injection gain for x_hat' = A x_hat + B1 u1 + B2 u2 + L (y - C x_hat).
struct ObserverGain {
    Matrix l{3, 1};
    PoleSpec target_poles;
};

/// Place eig(A - L C) by Ackermann on the dual pair (A^T, C^T).
[[nodiscard]] inline ObserverGain design_observer(const LinearModel& model, const PoleSpec& spec) {
    if (model.c.rows() != 1)
        throw DimensionMismatch("design_observer: expects a single measured output");
    if (observability_rank(model.a, model.c) < model.a.rows())
        throw Unobservable("design_observer: (A, C) is not observable; the currents cannot be reconstructed from v_dc");
    Matrix l = ackermann(model.a.transpose(), model.c.transpose(), spec).transpose();
    return {std::move(l), spec};
}

[[nodiscard]] inline Matrix observer_error_matrix(const LinearModel& model, const Matrix& l) { return model.a - l * model.c; }

[[nodiscard]] inline State observer_derivative(const ObserverGain& gain, const LinearModel& model, const State& x_hat,
                                               const DutyPair& u1, const GridVoltage& u2, double y) {
    const auto ax = model.a * std::span<const double>(x_hat);
    const auto b1u = model.b1 * std::span<const double>(u1);
    const auto b2u = model.b2 * std::span<const double>(u2);
    double y_hat = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
        y_hat += model.c(0, j) * x_hat[j];
    const double innovation = y - y_hat;
    State d{};
    for (std::size_t i = 0; i < 3; ++i)
        d[i] = ax[i] + b1u[i] + b2u[i] + gain.l(i, 0) * innovation;
    return d;
}

/**
 * Plant plus observer with the controller acting on the estimate, in
 * (x, x_hat) coordinates: [[A, -B1 K], [L C, A - B1 K - L C]].
 */
[[nodiscard]] inline Matrix separation_matrix(const LinearModel& model, const Matrix& k, const Matrix& l) {
    const std::size_t n = model.a.rows();
    const Matrix bk = model.b1 * k;
    const Matrix lc = l * model.c;
    Matrix out(2 * n, 2 * n);
    out.set_block(0, 0, model.a);
    out.set_block(0, n, -bk);
    out.set_block(n, 0, lc);
    out.set_block(n, n, model.a - bk - lc);
    return out;
}

} // namespace afe
