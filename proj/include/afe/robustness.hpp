#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "afe/control.hpp"
#include "afe/error.hpp"
#include "afe/model.hpp"
#include "afe/numerics/eigen.hpp"
#include "afe/numerics/matrix.hpp"

namespace afe {

/**
 * Energy-like quadratic form V = x^T P x for the state [i_gd, i_gq, v_dc]:
 * P = [[L/2, 0, sqrt(LC)/4], [0, L/2, 0], [sqrt(LC)/4, 0, C/2]].
 * Positive definite for every L, C > 0 since (L/2)(C/2) > LC/16.
 */
struct CandidateP {
    Matrix p{3, 3};
};

[[nodiscard]] inline CandidateP candidate_p(const SystemSpecs& s) {
    const double l = s.l_in;
    const double c = s.c_dc;
    if (!(l > 0.0) || !(c > 0.0))
        throw InvalidSpecs("candidate_p: inductance and capacitance must be positive");
    const double cross = std::sqrt(l * c) / 4.0;
    return {Matrix{{l / 2.0, 0.0, cross}, {0.0, l / 2.0, 0.0}, {cross, 0.0, c / 2.0}}};
}

/// A_cl^T P + P A_cl, averaged with its transpose.
[[nodiscard]] inline Matrix lyapunov_derivative_matrix(const Matrix& a_cl, const Matrix& p) {
    if (!a_cl.is_square() || !p.is_square() || a_cl.rows() != p.rows())
        throw DimensionMismatch("lyapunov_derivative_matrix: shapes differ");
    Matrix m = a_cl.transpose() * p + p * a_cl;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
    return m;
}

[[nodiscard]] inline Matrix lyapunov_derivative_matrix(const Matrix& a_cl, const CandidateP& p) {
    return lyapunov_derivative_matrix(a_cl, p.p);
}

struct SweepOptions {
    double l_min = 0.5;
    double l_max = 1.5;
    double r_min = 0.5;
    double r_max = 1.5;
    std::size_t l_points = 101;
    std::size_t r_points = 101;
    /// Keep the nominal (I_gd, M_d, M_q) in every cell instead of re-solving the steady state.
    bool freeze_operating_point = false;
    /// Worker threads; 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
};

struct SweepCell {
    double l_scale = 1.0;
    double r_scale = 1.0;
    bool feasible = false;
    std::array<double, 3> eig{}; ///< ascending eigenvalues of A_cl^T P + P A_cl
    std::string reason;          ///< why the cell is infeasible
};

struct SweepGrid {
    std::vector<double> l_scales;
    std::vector<double> r_scales;
    std::vector<SweepCell> cells; ///< l-major: index = i_l * r_scales.size() + i_r
    bool certified = false;
    double worst_eigenvalue = -std::numeric_limits<double>::infinity(); ///< max over feasible cells of eig[2]
    std::size_t worst_index = 0;
    std::size_t infeasible_count = 0;

    [[nodiscard]] const SweepCell& at(std::size_t i_l, std::size_t i_r) const { return cells.at(i_l * r_scales.size() + i_r); }
};

/**
 * i-th of `count` evenly spaced points on [lo, hi]. The numerator is exact for
 * the usual decimal ranges, so coarser grids reproduce the shared points of finer
 * grids bit for bit.
 */
[[nodiscard]] inline double grid_point(double lo, double hi, std::size_t i, std::size_t count) {
    if (count <= 1)
        return lo;
    const auto n1 = static_cast<double>(count - 1);
    const auto di = static_cast<double>(i);
    return (lo * (n1 - di) + hi * di) / n1;
}

/// Lyapunov-derivative eigenvalues for one (L, r) scaling with the gain and P held fixed.
[[nodiscard]] inline SweepCell evaluate_sweep_cell(const SystemSpecs& nominal, const OperatingPoint& nominal_op,
                                                   const Matrix& k, const Matrix& p, double l_scale, double r_scale,
                                                   bool freeze_operating_point) {
    SweepCell cell;
    cell.l_scale = l_scale;
    cell.r_scale = r_scale;
    SystemSpecs varied = nominal;
    varied.l_in *= l_scale;
    varied.r_s *= r_scale;
    OperatingPoint op = nominal_op;
    if (!freeze_operating_point) {
        try {
            op = solve_operating_point(varied);
        } catch (const Infeasible& e) {
            cell.reason = e.what();
            return cell;
        }
    }
    const LinearModel model = build_linear_model(varied, op);
    const auto ev = symmetric_eigenvalues(lyapunov_derivative_matrix(closed_loop_matrix(model, k), p));
    std::copy(ev.begin(), ev.end(), cell.eig.begin());
    cell.feasible = true;
    return cell;
}

/**
 * Robustness certificate over a rectangle of inductance / series-resistance
 * scalings. The gain stays at its nominal design and P is built from the
 * nominal L, C, so one fixed Lyapunov function has to cover every cell.
 *
 * The grid is certified when every feasible cell has a negative definite
 * A_cl^T P + P A_cl. Infeasible cells are reported, not thrown.
 */
[[nodiscard]] inline SweepGrid robustness_sweep(const SystemSpecs& specs, const GainMatrix& gain, const SweepOptions& opts = {}) {
    if (!(opts.l_min > 0.0) || !(opts.r_min > 0.0) || opts.l_max < opts.l_min || opts.r_max < opts.r_min ||
        !std::isfinite(opts.l_max) || !std::isfinite(opts.r_max))
        throw ConfigError("robustness_sweep: scale ranges must be finite, positive and ordered");
    if (opts.l_points == 0 || opts.r_points == 0)
        throw ConfigError("robustness_sweep: grid needs at least one point per axis");
    if (gain.k.rows() != 2 || gain.k.cols() != 3)
        throw DimensionMismatch("robustness_sweep: gain must be 2x3");

    const OperatingPoint nominal_op = solve_operating_point(specs);
    const Matrix p = candidate_p(specs).p;

    SweepGrid grid;
    for (std::size_t i = 0; i < opts.l_points; ++i)
        grid.l_scales.push_back(grid_point(opts.l_min, opts.l_max, i, opts.l_points));
    for (std::size_t j = 0; j < opts.r_points; ++j)
        grid.r_scales.push_back(grid_point(opts.r_min, opts.r_max, j, opts.r_points));
    const std::size_t total = opts.l_points * opts.r_points;
    grid.cells.resize(total);

    unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
    std::vector<std::exception_ptr> failures(threads);

    auto work = [&](unsigned worker, std::size_t begin, std::size_t end) {
        try {
            for (std::size_t idx = begin; idx < end; ++idx) {
                const std::size_t i = idx / opts.r_points;
                const std::size_t j = idx % opts.r_points;
                grid.cells[idx] = evaluate_sweep_cell(specs, nominal_op, gain.k, p, grid.l_scales[i], grid.r_scales[j],
                                                      opts.freeze_operating_point);
            }
        } catch (...) {
            failures[worker] = std::current_exception();
        }
    };

    if (threads <= 1) {
        work(0, 0, total);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (total + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(total, begin + chunk);
            if (begin < end)
                pool.emplace_back(work, t, begin, end);
        }
        for (auto& th : pool)
            th.join();
    }
    for (const auto& f : failures)
        if (f)
            std::rethrow_exception(f);

    std::size_t feasible = 0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        const auto& c = grid.cells[idx];
        if (!c.feasible) {
            ++grid.infeasible_count;
            continue;
        }
        ++feasible;
        if (c.eig[2] > grid.worst_eigenvalue) {
            grid.worst_eigenvalue = c.eig[2];
            grid.worst_index = idx;
        }
    }
    grid.certified = feasible > 0 && grid.worst_eigenvalue < 0.0;
    return grid;
}

} // namespace afe
