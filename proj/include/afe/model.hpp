#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "afe/error.hpp"
#include "afe/numerics/matrix.hpp"

namespace afe {

/// Averaged-model states [i_gd, i_gq, v_dc].
using State = std::array<double, 3>;
/// Manipulated duties [m_d, m_q].
using DutyPair = std::array<double, 2>;
/// dq grid voltages [v_gd, v_gq].
using GridVoltage = std::array<double, 2>;

/**
 * Physical and control-bandwidth description of a three-phase AFE rectifier
 * with resistive load. SI units throughout.
 *
 * r_load may be +infinity for the open-circuit (no-load) case.
 */
struct SystemSpecs {
    double v_g = 0.0;      ///< AC phase peak voltage [V]
    double v_dc = 0.0;     ///< DC-bus voltage setpoint [V]
    double p_rated = 0.0;  ///< rated power [W]
    double r_load = 0.0;   ///< load resistance [Ohm]
    double f_sw = 0.0;     ///< switching frequency [Hz]
    double f_0 = 0.0;      ///< grid frequency [Hz]
    double l_in = 0.0;     ///< input inductance [H]
    double c_dc = 0.0;     ///< DC-bus capacitance [F]
    double r_s = 0.0;      ///< inductor series resistance [Ohm]
    double f_i = 0.0;      ///< current-loop bandwidth [Hz]
    double f_v = 0.0;      ///< voltage-loop bandwidth [Hz]
    double m_cm = 0.0;     ///< common-mode duty, V_CM = m_cm * v_dc

    [[nodiscard]] double omega_0() const noexcept { return 2.0 * std::numbers::pi * f_0; }
    [[nodiscard]] double omega_i() const noexcept { return 2.0 * std::numbers::pi * f_i; }
    [[nodiscard]] double omega_v() const noexcept { return 2.0 * std::numbers::pi * f_v; }
    [[nodiscard]] double v_cm() const noexcept { return m_cm * v_dc; }

    /// The 25 kW, 400 V, 60 Hz reference rectifier used throughout the tests and example config.
    [[nodiscard]] static SystemSpecs reference() {
        SystemSpecs s;
        s.v_g = 187.8;
        s.v_dc = 400.0;
        s.p_rated = 25e3;
        s.r_load = 6.4;
        s.f_sw = 10e3;
        s.f_0 = 60.0;
        s.l_in = 0.34e-3;
        s.c_dc = 1300e-6;
        s.r_s = 5e-3;
        s.f_i = 1e3;
        s.f_v = 100.0;
        s.m_cm = 0.5;
        return s;
    }
};

/**
 * Check physical plausibility. Hard violations throw InvalidSpecs; soft ones
 * (loop-bandwidth ordering f_v < f_i) come back as warning strings.
 */
[[nodiscard]] inline std::vector<std::string> validate_specs(const SystemSpecs& s) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || std::isnan(v))
            throw InvalidSpecs(std::string(name) + " must be strictly positive");
    };
    auto finite_positive = [&](double v, const char* name) {
        positive(v, name);
        if (!std::isfinite(v))
            throw InvalidSpecs(std::string(name) + " must be finite");
    };
    finite_positive(s.v_g, "v_g");
    finite_positive(s.v_dc, "v_dc");
    finite_positive(s.f_sw, "f_sw");
    finite_positive(s.f_0, "f_0");
    finite_positive(s.l_in, "l_in");
    finite_positive(s.c_dc, "c_dc");
    // an ideal (lossless) inductor is allowed
    if (!(s.r_s >= 0.0) || !std::isfinite(s.r_s))
        throw InvalidSpecs("r_s must be finite and non-negative");
    finite_positive(s.f_i, "f_i");
    finite_positive(s.f_v, "f_v");
    positive(s.r_load, "r_load");
    if (!(s.p_rated >= 0.0) || !std::isfinite(s.p_rated))
        throw InvalidSpecs("p_rated must be finite and non-negative");
    if (!(s.m_cm > 0.0 && s.m_cm < 1.0))
        throw InvalidSpecs("m_cm must lie in (0, 1)");

    const double p_load = std::isinf(s.r_load) ? 0.0 : s.v_dc * s.v_dc / s.r_load;
    const double p_scale = std::max(p_load, s.p_rated);
    if (p_scale > 0.0 && std::abs(p_load - s.p_rated) > 1e-3 * p_scale)
        throw InvalidSpecs("v_dc^2/r_load = " + std::to_string(p_load) + " W is inconsistent with p_rated = " +
                           std::to_string(s.p_rated) + " W (0.1% tolerance)");

    if (s.f_i >= s.f_sw / 2.0)
        throw InvalidSpecs("current-loop bandwidth f_i must stay below f_sw/2");
    std::vector<std::string> warnings;
    if (s.f_v >= s.f_i)
        warnings.emplace_back("voltage-loop bandwidth f_v is not below current-loop bandwidth f_i; loop separation is lost");
    return warnings;
}

/// Large-signal steady state in the grid-voltage-aligned dq frame.
struct OperatingPoint {
    double i_gd = 0.0;
    double i_gq = 0.0;
    double m_d = 0.0;
    double m_q = 0.0;
    double v_gd = 0.0;
    double v_gq = 0.0;
    double v_dc = 0.0;

    [[nodiscard]] State state() const noexcept { return {i_gd, i_gq, v_dc}; }
    [[nodiscard]] DutyPair duty() const noexcept { return {m_d, m_q}; }
    [[nodiscard]] GridVoltage grid() const noexcept { return {v_gd, v_gq}; }
    [[nodiscard]] double modulation_magnitude() const noexcept { return std::hypot(m_d, m_q); }
};

[[nodiscard]] inline double load_conductance(const SystemSpecs& s) noexcept {
    return std::isinf(s.r_load) ? 0.0 : 1.0 / s.r_load;
}

/**
 * Relative residuals of the three steady-state relations
 *   M_d V_dc = V_gd - I_gd r,   M_q V_dc = -w0 L I_gd,   V_dc^2 / R = 1.5 M_d V_dc I_gd.
 * The voltage relations are normalized by V_gd, the power relation by the larger
 * of its two sides.
 */
[[nodiscard]] inline std::array<double, 3> operating_point_residuals(const SystemSpecs& s, const OperatingPoint& op) {
    const double vscale = std::max(std::abs(op.v_gd), 1e-300);
    const double r1 = std::abs(op.m_d * op.v_dc - (op.v_gd - op.i_gd * s.r_s)) / vscale;
    const double r2 = std::abs(op.m_q * op.v_dc + s.omega_0() * s.l_in * op.i_gd) / vscale;
    const double p_load = op.v_dc * op.v_dc * load_conductance(s);
    const double p_conv = 1.5 * op.m_d * op.v_dc * op.i_gd;
    const double pscale = std::max({std::abs(p_load), std::abs(p_conv), 1e-12});
    const double r3 = std::abs(p_load - p_conv) / pscale;
    return {r1, r2, r3};
}

/**
 * Steady-state operating point for the resistive load.
 *
 * Eliminating M_d gives 1.5 r I^2 - 1.5 V_g I + V_dc^2/R = 0; the smaller root
 * is the physical low-loss branch and is evaluated in the cancellation-free
 * form I = 2c / (1.5 V_g + sqrt(disc)), which also covers r = 0 and R = inf.
 */
[[nodiscard]] inline OperatingPoint solve_operating_point(const SystemSpecs& s) {
    (void)validate_specs(s);
    const double vg = s.v_g;
    const double c = s.v_dc * s.v_dc * load_conductance(s);
    const double disc = 2.25 * vg * vg - 6.0 * s.r_s * c;
    if (disc < 0.0)
        throw InfeasibleLoad("InfeasibleLoad: demanded load power " + std::to_string(c) +
                             " W exceeds the maximum transferable power " + std::to_string(0.375 * vg * vg / s.r_s) +
                             " W (power balance V_dc^2/R = 1.5 M_d V_dc I_gd has no real solution)");
    OperatingPoint op;
    op.v_gd = vg;
    op.v_gq = 0.0;
    op.v_dc = s.v_dc;
    op.i_gq = 0.0;
    op.i_gd = 2.0 * c / (1.5 * vg + std::sqrt(disc));
    op.m_d = (vg - op.i_gd * s.r_s) / s.v_dc;
    op.m_q = -s.omega_0() * s.l_in * op.i_gd / s.v_dc;
    if (op.modulation_magnitude() > s.m_cm)
        throw ModulationLimit("ModulationLimit: |M| = " + std::to_string(op.modulation_magnitude()) +
                              " exceeds the linear modulation bound m_cm = " + std::to_string(s.m_cm));
    return op;
}

/// Averaged large-signal dynamics d/dt [i_gd, i_gq, v_dc].
[[nodiscard]] inline State nonlinear_derivative(const State& x, const DutyPair& m, const GridVoltage& vg,
                                                const SystemSpecs& s) noexcept {
    const double l = s.l_in;
    const double w0 = s.omega_0();
    return {
        (vg[0] - m[0] * x[2] - x[0] * s.r_s + w0 * l * x[1]) / l,
        (vg[1] - m[1] * x[2] - x[1] * s.r_s - w0 * l * x[0]) / l,
        (1.5 * (m[0] * x[0] + m[1] * x[1]) - x[2] * load_conductance(s)) / s.c_dc,
    };
}

/// Small-signal plant: states [i_gd, i_gq, v_dc], inputs u1 = [m_d, m_q], disturbances u2 = [v_gd, v_gq], output v_dc.
struct LinearModel {
    Matrix a{3, 3};
    Matrix b1{3, 2};
    Matrix b2{3, 2};
    Matrix c{1, 3};
    Matrix d{1, 2};
};

/// Assemble the small-signal matrices without checking that op is an equilibrium of s.
[[nodiscard]] inline LinearModel build_linear_model(const SystemSpecs& s, const OperatingPoint& op) {
    const double l = s.l_in;
    const double cap = s.c_dc;
    const double w0 = s.omega_0();
    LinearModel m;
    m.a = Matrix{
        {-s.r_s / l, w0, -op.m_d / l},
        {-w0, -s.r_s / l, -op.m_q / l},
        {1.5 * op.m_d / cap, 1.5 * op.m_q / cap, -load_conductance(s) / cap},
    };
    m.b1 = Matrix{
        {-op.v_dc / l, 0.0},
        {0.0, -op.v_dc / l},
        {1.5 * op.i_gd / cap, 1.5 * op.i_gq / cap},
    };
    m.b2 = Matrix{{1.0 / l, 0.0}, {0.0, 1.0 / l}, {0.0, 0.0}};
    m.c = Matrix{{0.0, 0.0, 1.0}};
    m.d = Matrix{{0.0, 0.0}};
    return m;
}

/// Relative tolerance on the steady-state relations accepted by linearize().
inline constexpr double operating_point_tolerance = 1e-9;

/// Linearize around op; throws InvalidOperatingPoint when op does not satisfy the steady-state relations.
[[nodiscard]] inline LinearModel linearize(const SystemSpecs& s, const OperatingPoint& op) {
    const auto res = operating_point_residuals(s, op);
    static constexpr const char* names[] = {"d-axis voltage balance", "q-axis voltage balance", "DC power balance"};
    for (std::size_t k = 0; k < res.size(); ++k)
        if (!(res[k] <= operating_point_tolerance))
            throw InvalidOperatingPoint(std::string("linearize: operating point violates the ") + names[k] +
                                        " (relative residual " + std::to_string(res[k]) + ")");
    return build_linear_model(s, op);
}

} // namespace afe
