#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "afe/control.hpp"
#include "afe/error.hpp"
#include "afe/model.hpp"
#include "afe/numerics/eigen.hpp"
#include "afe/numerics/matrix.hpp"
#include "afe/observer.hpp"

namespace afe {

enum class SimMode { linear, nonlinear, observer_in_loop };

[[nodiscard]] inline const char* to_string(SimMode m) noexcept {
    switch (m) {
    case SimMode::linear:
        return "linear";
    case SimMode::nonlinear:
        return "nonlinear";
    case SimMode::observer_in_loop:
        return "observer_in_loop";
    }
    return "?";
}

/// Grid-voltage deviation [v_gd, v_gq] as a function of time.
using Disturbance = std::function<GridVoltage(double)>;

inline constexpr double default_sim_dt = 1e-6;
inline constexpr double default_observer_sim_dt = 5e-7;
/// dt * |fastest pole| must not exceed 1 / stiffness_margin.
inline constexpr double stiffness_margin = 20.0;
/// Any state beyond this magnitude aborts the run.
inline constexpr double divergence_threshold = 1e12;

struct SimConfig {
    std::optional<double> dt; ///< unset: 1e-6 s, or 5e-7 s with the observer in the loop
    double t_end = 0.05;
    SimMode mode = SimMode::linear;
    State x0{};     ///< initial small-signal plant state
    State x_hat0{}; ///< initial small-signal estimate (observer mode)
    GainMatrix gain;
    std::optional<ObserverGain> observer;
    Disturbance disturbance;
    std::size_t decimation = 1; ///< keep every n-th sample
};

/**
 * Uniformly sampled run. States are small-signal deviations in linear and
 * observer modes and total quantities in nonlinear mode; inputs follow the
 * same convention for the duties.
 */
struct Trajectory {
    double dt = 0.0; ///< sample spacing (integration step times decimation)
    std::vector<double> t;
    std::vector<State> states;
    std::vector<DutyPair> inputs;
    std::vector<State> estimates; ///< empty unless the observer ran

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
    [[nodiscard]] bool has_estimates() const noexcept { return !estimates.empty(); }
};

template<std::size_t N, typename F>
[[nodiscard]] std::array<double, N> rk4_step(F&& f, double t, const std::array<double, N>& x, double h) {
    auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
        std::array<double, N> out{};
        for (std::size_t i = 0; i < N; ++i)
            out[i] = a[i] + s * b[i];
        return out;
    };
    const auto k1 = f(t, x);
    const auto k2 = f(t + h / 2.0, axpy(x, h / 2.0, k1));
    const auto k3 = f(t + h / 2.0, axpy(x, h / 2.0, k2));
    const auto k4 = f(t + h, axpy(x, h, k3));
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i)
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

namespace detail {

template<std::size_t N>
void check_divergence(const std::array<double, N>& x, double t) {
    for (double v : x)
        if (!std::isfinite(v) || std::abs(v) > divergence_threshold)
            throw NonFinite("simulation diverged at t = " + std::to_string(t) + " s (state magnitude above 1e12)");
}

template<std::size_t N>
std::array<double, N> mat_vec(const Matrix& m, const std::array<double, N>& x) {
    std::array<double, N> y{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            y[i] += m(i, j) * x[j];
    return y;
}

inline DutyPair feedback(const Matrix& k, const State& x) {
    DutyPair u{};
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            u[i] -= k(i, j) * x[j];
    return u;
}

} // namespace detail

[[nodiscard]] inline double resolved_dt(const SimConfig& cfg) {
    if (cfg.dt)
        return *cfg.dt;
    return cfg.mode == SimMode::observer_in_loop ? default_observer_sim_dt : default_sim_dt;
}

/// System matrix whose eigenvalues bound the step size for the configured mode.
[[nodiscard]] inline Matrix stiffness_matrix(const SimConfig& cfg, const LinearModel& model) {
    if (cfg.mode == SimMode::observer_in_loop) {
        if (!cfg.observer)
            throw ConfigError("simulate: observer_in_loop mode needs an observer gain");
        return separation_matrix(model, cfg.gain.k, cfg.observer->l);
    }
    return closed_loop_matrix(model, cfg.gain.k);
}

[[nodiscard]] inline double fastest_pole_magnitude(const Matrix& m) {
    double fastest = 0.0;
    for (const auto& ev : eigenvalues(m))
        fastest = std::max(fastest, std::abs(ev));
    return fastest;
}

/// Throws StiffnessGuard when dt * |fastest pole| > 1/20.
inline void check_stiffness(double dt, double fastest, const char* what) {
    if (!(dt > 0.0))
        throw StiffnessGuard(std::string(what) + ": step must be positive");
    if (dt * fastest * stiffness_margin > 1.0)
        throw StiffnessGuard(std::string(what) + ": dt = " + std::to_string(dt) + " s is too coarse for the fastest pole |" +
                             std::to_string(fastest) + "| rad/s; need dt <= " + std::to_string(1.0 / (stiffness_margin * fastest)));
}

/**
 * Fixed-step RK4 run of the closed loop.
 *   linear:           x' = (A - B1 K) x + B2 u2
 *   nonlinear:        averaged large-signal plant, m = M + (-K (X - X_op))
 *   observer_in_loop: linear plant driven by u1 = -K x_hat, x_hat from the Luenberger observer
 */
[[nodiscard]] inline Trajectory simulate(const SimConfig& cfg, const LinearModel& model, const SystemSpecs& specs,
                                         const OperatingPoint& op) {
    const double dt = resolved_dt(cfg);
    if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end))
        throw ConfigError("simulate: t_end must be positive");
    if (cfg.decimation == 0)
        throw ConfigError("simulate: decimation must be at least 1");
    check_stiffness(dt, fastest_pole_magnitude(stiffness_matrix(cfg, model)), "simulate");

    const auto steps = static_cast<std::size_t>(std::llround(cfg.t_end / dt));
    const Matrix& k = cfg.gain.k;
    auto u2_at = [&](double t) -> GridVoltage { return cfg.disturbance ? cfg.disturbance(t) : GridVoltage{0.0, 0.0}; };

    Trajectory traj;
    traj.dt = dt * static_cast<double>(cfg.decimation);
    const std::size_t kept = steps / cfg.decimation + 1;
    traj.t.reserve(kept);
    traj.states.reserve(kept);
    traj.inputs.reserve(kept);

    auto record = [&](std::size_t step, const State& x, const DutyPair& u, const State* est) {
        if (step % cfg.decimation != 0)
            return;
        traj.t.push_back(static_cast<double>(step) * dt);
        traj.states.push_back(x);
        traj.inputs.push_back(u);
        if (est)
            traj.estimates.push_back(*est);
    };

    switch (cfg.mode) {
    case SimMode::linear: {
        const Matrix a_cl = closed_loop_matrix(model, k);
        auto f = [&](double t, const State& x) {
            State d = detail::mat_vec(a_cl, x);
            const auto u2 = u2_at(t);
            for (std::size_t i = 0; i < 3; ++i)
                d[i] += model.b2(i, 0) * u2[0] + model.b2(i, 1) * u2[1];
            return d;
        };
        State x = cfg.x0;
        record(0, x, detail::feedback(k, x), nullptr);
        for (std::size_t s = 1; s <= steps; ++s) {
            x = rk4_step(f, static_cast<double>(s - 1) * dt, x, dt);
            detail::check_divergence(x, static_cast<double>(s) * dt);
            record(s, x, detail::feedback(k, x), nullptr);
        }
        break;
    }
    case SimMode::nonlinear: {
        const State x_op = op.state();
        const DutyPair m_op = op.duty();
        const GridVoltage v_op = op.grid();
        auto duty = [&](const State& x) {
            const State dev{x[0] - x_op[0], x[1] - x_op[1], x[2] - x_op[2]};
            const DutyPair du = detail::feedback(k, dev);
            return DutyPair{m_op[0] + du[0], m_op[1] + du[1]};
        };
        auto f = [&](double t, const State& x) {
            const auto u2 = u2_at(t);
            return nonlinear_derivative(x, duty(x), GridVoltage{v_op[0] + u2[0], v_op[1] + u2[1]}, specs);
        };
        State x{x_op[0] + cfg.x0[0], x_op[1] + cfg.x0[1], x_op[2] + cfg.x0[2]};
        record(0, x, duty(x), nullptr);
        for (std::size_t s = 1; s <= steps; ++s) {
            x = rk4_step(f, static_cast<double>(s - 1) * dt, x, dt);
            detail::check_divergence(x, static_cast<double>(s) * dt);
            record(s, x, duty(x), nullptr);
        }
        break;
    }
    case SimMode::observer_in_loop: {
        const ObserverGain& obs = *cfg.observer;
        using Aug = std::array<double, 6>;
        auto split = [](const Aug& z) {
            return std::pair<State, State>{State{z[0], z[1], z[2]}, State{z[3], z[4], z[5]}};
        };
        auto f = [&](double t, const Aug& z) {
            const auto [x, xh] = split(z);
            const DutyPair u1 = detail::feedback(k, xh);
            const auto u2 = u2_at(t);
            const auto ax = detail::mat_vec(model.a, x);
            double y = 0.0;
            for (std::size_t j = 0; j < 3; ++j)
                y += model.c(0, j) * x[j];
            const State dxh = observer_derivative(obs, model, xh, u1, u2, y);
            Aug d{};
            for (std::size_t i = 0; i < 3; ++i) {
                d[i] = ax[i] + model.b1(i, 0) * u1[0] + model.b1(i, 1) * u1[1] + model.b2(i, 0) * u2[0] +
                       model.b2(i, 1) * u2[1];
                d[i + 3] = dxh[i];
            }
            return d;
        };
        Aug z{cfg.x0[0], cfg.x0[1], cfg.x0[2], cfg.x_hat0[0], cfg.x_hat0[1], cfg.x_hat0[2]};
        traj.estimates.reserve(kept);
        {
            const auto [x, xh] = split(z);
            record(0, x, detail::feedback(k, xh), &xh);
        }
        for (std::size_t s = 1; s <= steps; ++s) {
            z = rk4_step(f, static_cast<double>(s - 1) * dt, z, dt);
            detail::check_divergence(z, static_cast<double>(s) * dt);
            const auto [x, xh] = split(z);
            record(s, x, detail::feedback(k, xh), &xh);
        }
        break;
    }
    }
    return traj;
}

/// Estimation error e = x - x_hat of an observer-in-loop run; states hold e, inputs the applied duties.
[[nodiscard]] inline Trajectory observer_error_trajectory(const SimConfig& cfg, const LinearModel& model,
                                                          const SystemSpecs& specs, const OperatingPoint& op) {
    if (cfg.mode != SimMode::observer_in_loop || !cfg.observer)
        throw ConfigError("observer_error_trajectory: needs observer_in_loop mode with an observer gain");
    Trajectory run = simulate(cfg, model, specs, op);
    Trajectory err;
    err.dt = run.dt;
    err.t = run.t;
    err.inputs = run.inputs;
    err.states.reserve(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) {
        const auto& x = run.states[i];
        const auto& xh = run.estimates[i];
        err.states.push_back({x[0] - xh[0], x[1] - xh[1], x[2] - xh[2]});
    }
    return err;
}

/// RK4 integration of the autonomous system x' = a x (3 states).
[[nodiscard]] inline Trajectory integrate_autonomous(const Matrix& a, const State& x0, double dt, double t_end,
                                                     std::size_t decimation = 1) {
    if (a.rows() != 3 || a.cols() != 3)
        throw DimensionMismatch("integrate_autonomous: expects a 3x3 matrix");
    check_stiffness(dt, fastest_pole_magnitude(a), "integrate_autonomous");
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    auto f = [&](double, const State& x) { return detail::mat_vec(a, x); };
    Trajectory traj;
    traj.dt = dt * static_cast<double>(decimation);
    State x = x0;
    for (std::size_t s = 0; s <= steps; ++s) {
        if (s > 0) {
            x = rk4_step(f, static_cast<double>(s - 1) * dt, x, dt);
            detail::check_divergence(x, static_cast<double>(s) * dt);
        }
        if (s % decimation == 0) {
            traj.t.push_back(static_cast<double>(s) * dt);
            traj.states.push_back(x);
            traj.inputs.push_back({0.0, 0.0});
        }
    }
    return traj;
}

enum class Channel { i_gd = 0, i_gq = 1, v_dc = 2, norm = 3 };

[[nodiscard]] inline double channel_value(const State& x, Channel ch) {
    if (ch == Channel::norm)
        return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    return x[static_cast<std::size_t>(ch)];
}

struct TimeWindow {
    double begin = 0.0;
    double end = 0.0;
};

/// Samples below this magnitude are treated as numerical noise by the decay fit.
inline constexpr double decay_fit_floor = 1e-12;

/**
 * Exponential decay rate [1/s] of one channel over a time window: least
 * squares slope of log|envelope|. The envelope is the raw magnitude for
 * monotone decays and the successive |peak| sequence for oscillating ones,
 * either through zero or, for the norm, with repeated interior maxima.
 */
[[nodiscard]] inline double fit_decay_rate(const Trajectory& traj, Channel ch, TimeWindow window) {
    std::vector<double> ts, vs;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.t[i] < window.begin || traj.t[i] > window.end)
            continue;
        ts.push_back(traj.t[i]);
        vs.push_back(channel_value(traj.states[i], ch));
    }
    bool oscillates = false;
    for (std::size_t i = 1; i < vs.size(); ++i)
        if ((vs[i - 1] > 0.0 && vs[i] < 0.0) || (vs[i - 1] < 0.0 && vs[i] > 0.0))
            oscillates = true;
    std::size_t interior_maxima = 0;
    for (std::size_t i = 1; i + 1 < vs.size(); ++i)
        if (std::abs(vs[i]) > std::abs(vs[i - 1]) && std::abs(vs[i]) > std::abs(vs[i + 1]))
            ++interior_maxima;
    oscillates = oscillates || interior_maxima >= 2;

    std::vector<double> px, py;
    if (oscillates) {
        for (std::size_t i = 1; i + 1 < vs.size(); ++i) {
            const double m = std::abs(vs[i]);
            if (m >= std::abs(vs[i - 1]) && m > std::abs(vs[i + 1]) && m > decay_fit_floor) {
                px.push_back(ts[i]);
                py.push_back(std::log(m));
            }
        }
    } else {
        for (std::size_t i = 0; i < vs.size(); ++i) {
            const double m = std::abs(vs[i]);
            if (m > decay_fit_floor) {
                px.push_back(ts[i]);
                py.push_back(std::log(m));
            }
        }
    }
    if (px.size() < 2)
        throw InsufficientDecay("fit_decay_rate: fewer than two usable samples in the window");
    const auto [lo, hi] = std::minmax_element(py.begin(), py.end());
    if ((*hi - *lo) / std::log(10.0) < 2.0)
        throw InsufficientDecay("fit_decay_rate: amplitude spans less than two decades in the window");

    const auto n = static_cast<double>(px.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        sx += px[i];
        sy += py[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        sxx += (px[i] - mx) * (px[i] - mx);
        sxy += (px[i] - mx) * (py[i] - my);
    }
    return -sxy / sxx;
}

/// First time after which |channel| stays within band * max|channel|.
[[nodiscard]] inline double settling_time(const Trajectory& traj, Channel ch, double band = 0.02) {
    double peak = 0.0;
    for (const auto& x : traj.states)
        peak = std::max(peak, std::abs(channel_value(x, ch)));
    if (peak == 0.0)
        return 0.0;
    for (std::size_t i = traj.size(); i-- > 0;)
        if (std::abs(channel_value(traj.states[i], ch)) > band * peak)
            return i + 1 < traj.size() ? traj.t[i + 1] : traj.t[i];
    return 0.0;
}

} // namespace afe
