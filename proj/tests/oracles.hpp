#pragma once

// Independent reference computations and frozen reference values shared by the test suites.
// Nothing here reuses the library's own solvers for the quantity under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "afe/afe.hpp"

namespace oracle {

using afe::Matrix;

constexpr double two_pi = 2.0 * std::numbers::pi;

[[nodiscard]] inline double rel_err(double actual, double expected) {
    return std::abs(actual - expected) / std::max(std::abs(expected), 1e-300);
}

/// Matrix exponential by scaling and squaring with a degree-20 Taylor core.
[[nodiscard]] inline Matrix expm(const Matrix& a) {
    const std::size_t n = a.rows();
    const double norm = a.inf_norm();
    int squarings = 0;
    if (norm > 0.25)
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
    const Matrix scaled = a * std::ldexp(1.0, -squarings);
    Matrix term = Matrix::identity(n);
    Matrix sum = Matrix::identity(n);
    for (int k = 1; k <= 20; ++k) {
        term = term * scaled * (1.0 / k);
        sum = sum + term;
    }
    for (int s = 0; s < squarings; ++s)
        sum = sum * sum;
    return sum;
}

/// Central-difference Jacobians of the averaged plant with respect to the state and the duty pair.
struct Jacobians {
    Matrix dx{3, 3};
    Matrix du{3, 2};
};

[[nodiscard]] inline Jacobians finite_difference_jacobians(const afe::SystemSpecs& s, const afe::OperatingPoint& op,
                                                           double rel_step = 1e-6) {
    Jacobians j;
    const afe::State x = op.state();
    const afe::DutyPair u = op.duty();
    const afe::GridVoltage g = op.grid();
    for (std::size_t k = 0; k < 3; ++k) {
        const double h = rel_step * std::max(std::abs(x[k]), 1.0);
        afe::State xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const auto fp = afe::nonlinear_derivative(xp, u, g, s);
        const auto fm = afe::nonlinear_derivative(xm, u, g, s);
        for (std::size_t i = 0; i < 3; ++i)
            j.dx(i, k) = (fp[i] - fm[i]) / (2.0 * h);
    }
    for (std::size_t k = 0; k < 2; ++k) {
        const double h = rel_step * std::max(std::abs(u[k]), 1.0);
        afe::DutyPair up = u, um = u;
        up[k] += h;
        um[k] -= h;
        const auto fp = afe::nonlinear_derivative(x, up, g, s);
        const auto fm = afe::nonlinear_derivative(x, um, g, s);
        for (std::size_t i = 0; i < 3; ++i)
            j.du(i, k) = (fp[i] - fm[i]) / (2.0 * h);
    }
    return j;
}

/// Complex eigenvalues of a 3x3 real matrix from its characteristic cubic (Cardano with Newton polish).
[[nodiscard]] inline std::vector<std::complex<double>> eig3(const Matrix& a) {
    const double tr = a.trace();
    const double m2 = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0) + a(1, 1) * a(2, 2) -
                      a(1, 2) * a(2, 1);
    const double det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                       a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    // s^3 + b s^2 + c s + d
    const std::complex<double> b = -tr, c = m2, d = -det;
    auto poly = [&](std::complex<double> s) { return ((s + b) * s + c) * s + d; };
    auto dpoly = [&](std::complex<double> s) { return (3.0 * s + 2.0 * b) * s + c; };
    const std::complex<double> p = c - b * b / 3.0;
    const std::complex<double> q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const std::complex<double> disc = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    std::complex<double> u = std::pow(-q / 2.0 + disc, 1.0 / 3.0);
    if (std::abs(u) < 1e-300)
        u = std::pow(-q / 2.0 - disc, 1.0 / 3.0);
    const std::complex<double> w(-0.5, std::sqrt(3.0) / 2.0);
    std::vector<std::complex<double>> roots;
    for (int k = 0; k < 3; ++k) {
        const std::complex<double> uk = u * std::pow(w, k);
        std::complex<double> s = (std::abs(uk) > 0.0 ? uk - p / (3.0 * uk) : 0.0) - b / 3.0;
        for (int it = 0; it < 5; ++it) {
            const auto dp = dpoly(s);
            if (std::abs(dp) == 0.0)
                break;
            s -= poly(s) / dp;
        }
        roots.push_back(s);
    }
    return roots;
}

// ---- frozen reference values (numpy / scipy, float64) ----------------------

/// Robust-placement gain at the reference point.
inline const Matrix k_ss_reference{{-5.96831446e-03, -3.20442451e-04, -2.38632840e-03},
                                   {3.20442451e-04, -5.32820751e-03, -7.12644641e-05}};

/// Reference design gains, quoted to 4-5 significant digits.
inline const Matrix k_ss_design{{-5.9682e-3, -0.3204e-3, -2.3864e-3}, {0.3204e-3, -5.3283e-3, -0.0713e-3}};
inline const Matrix k_fd_design{{-5.8623e-3, -0.3204e-3, -2.4338e-3}, {0.3204e-3, -5.3282e-3, -0.0713e-3}};

/// Closed-loop poles of the closed-form gain [Hz], sorted most negative first, per power scale.
struct FdPoleRow {
    double power_scale;
    std::array<double, 3> poles_hz;
};
inline const std::vector<FdPoleRow> fd_closed_loop_poles_hz{
    {1.00, {-1000.0, -977.02145994, -102.35189717}}, {0.70, {-1000.0, -974.015, -102.668}},
    {0.85, {-1000.0, -974.449, -102.622}},           {1.15, {-1000.0, -981.735, -101.860}},
    {1.30, {-1000.0, -988.590, -101.154}},           {0.50, {-1000.0, -976.752, -102.380}},
};

inline const std::array<double, 3> observer_l_reference{1.60803108e7, 1.20333581e8, 1.31797287e5};

/// Eigenvalues of A_cl^T P + P A_cl at selected sweep cells.
struct SweepGolden {
    afe::GainProvenance gain;
    bool frozen;
    double l_scale;
    double r_scale;
    std::array<double, 3> eig;
};
inline const std::vector<SweepGolden> sweep_golden{
    {afe::GainProvenance::frequency_domain, false, 0.5, 1.5, {-6.580680937614, -4.277708519746, -0.393671297443}},
    {afe::GainProvenance::frequency_domain, false, 1.5, 0.5, {-1.503483283023, -1.422286073728, -0.454086209938}},
    {afe::GainProvenance::frequency_domain, false, 1.0, 1.0, {-2.769956132472, -2.136283004441, -0.441464299802}},
    {afe::GainProvenance::frequency_domain, true, 0.5, 1.5, {-6.581868043512, -4.2775868846, -0.394108732667}},
    {afe::GainProvenance::frequency_domain, true, 1.5, 0.5, {-1.504166107182, -1.421213504647, -0.453703750198}},
    {afe::GainProvenance::frequency_domain, true, 0.5, 0.5, {-6.570812011928, -4.267586953801, -0.39516469505}},
    {afe::GainProvenance::state_space, false, 0.5, 1.5, {-6.637142868885, -4.277744279481, -0.387719118794}},
    {afe::GainProvenance::state_space, false, 1.5, 0.5, {-1.520082950529, -1.422384842577, -0.456025573579}},
    {afe::GainProvenance::state_space, false, 1.0, 1.0, {-2.796221404956, -2.136283004441, -0.441815348328}},
    {afe::GainProvenance::state_space, true, 0.5, 1.5, {-6.638324373671, -4.277621079385, -0.388160511351}},
    {afe::GainProvenance::state_space, true, 1.5, 0.5, {-1.520541711745, -1.421543427152, -0.455639216601}},
    {afe::GainProvenance::state_space, true, 0.5, 0.5, {-6.6272136749, -4.267621263147, -0.38927102636}},
};

/// Worst (largest) derivative-matrix eigenvalue over the default 101 x 101 grid.
inline constexpr double sweep_worst_fd_resolved = -0.39367;
inline constexpr double sweep_worst_fd_frozen = -0.39411;
inline constexpr double sweep_worst_ss_resolved = -0.38772;
inline constexpr double sweep_worst_ss_frozen = -0.38816;

// ---- random inputs --------------------------------------------------------

/// Reference specs with every physical field scaled by an independent factor in [lo, hi];
/// redrawn until the operating point exists.
[[nodiscard]] inline afe::SystemSpecs random_specs(std::mt19937_64& rng, double lo = 0.5, double hi = 1.5) {
    std::uniform_real_distribution<double> f(lo, hi);
    for (;;) {
        afe::SystemSpecs s = afe::SystemSpecs::reference();
        s.v_g *= f(rng);
        s.v_dc *= f(rng);
        s.r_load *= f(rng);
        s.f_0 *= f(rng);
        s.l_in *= f(rng);
        s.c_dc *= f(rng);
        s.r_s *= f(rng);
        s.f_i *= f(rng);
        s.f_v *= f(rng);
        s.p_rated = s.v_dc * s.v_dc / s.r_load;
        try {
            (void)afe::solve_operating_point(s);
            return s;
        } catch (const afe::Infeasible&) {
        }
    }
}

[[nodiscard]] inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            m(i, j) = g(rng);
    return m;
}

} // namespace oracle
