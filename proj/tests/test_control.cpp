#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "afe/analysis.hpp"
#include "afe/control.hpp"
#include "afe/numerics/eigen.hpp"
#include "oracles.hpp"

using afe::Eigenvalue;
using afe::Matrix;
using afe::PoleSpec;
using afe::SystemSpecs;
using oracle::rel_err;
using oracle::two_pi;

namespace {

struct Plant {
    SystemSpecs specs;
    afe::OperatingPoint op;
    afe::LinearModel model;
};

Plant plant(const SystemSpecs& s) {
    const auto op = afe::solve_operating_point(s);
    return {s, op, afe::linearize(s, op)};
}

Plant reference_plant() { return plant(SystemSpecs::reference()); }

std::vector<double> sorted_real_hz(const std::vector<Eigenvalue>& ev) {
    std::vector<double> out;
    for (const auto& e : ev)
        out.push_back(e.real() / two_pi);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST(PoleSpec, ValidatesTargets) {
    EXPECT_THROW(PoleSpec(std::vector<Eigenvalue>{}), afe::InvalidPoleSpec);
    EXPECT_THROW(PoleSpec({{-1.0, 0.0}, {0.5, 0.0}}), afe::InvalidPoleSpec);
    EXPECT_THROW(PoleSpec(std::vector<Eigenvalue>{{0.0, 0.0}}), afe::InvalidPoleSpec);
    EXPECT_THROW(PoleSpec({{-1.0, 2.0}, {-3.0, 0.0}}), afe::InvalidPoleSpec);
    EXPECT_THROW(PoleSpec(std::vector<Eigenvalue>{{NAN, 0.0}}), afe::InvalidPoleSpec);
}

TEST(PoleSpec, OrdersConjugatePairs) {
    const PoleSpec p({{-1.0, -2.0}, {-7.0, 0.0}, {-1.0, 2.0}});
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p.poles()[0], Eigenvalue(-1.0, 2.0));
    EXPECT_EQ(p.poles()[1], Eigenvalue(-1.0, -2.0));
    EXPECT_EQ(p.poles()[2], Eigenvalue(-7.0, 0.0));
}

TEST(PoleSpec, FromBandwidthsAndScaling) {
    const auto p = PoleSpec::from_bandwidths(SystemSpecs::reference());
    ASSERT_EQ(p.size(), 3u);
    EXPECT_DOUBLE_EQ(p.poles()[0].real(), -two_pi * 1000.0);
    EXPECT_DOUBLE_EQ(p.poles()[1].real(), -two_pi * 1000.0);
    EXPECT_DOUBLE_EQ(p.poles()[2].real(), -two_pi * 100.0);
    EXPECT_EQ(p.max_multiplicity(), 2u);
    const auto q = p.scaled(10.0);
    EXPECT_DOUBLE_EQ(q.poles()[2].real(), -two_pi * 1000.0);
    EXPECT_THROW((void)p.scaled(-1.0), afe::InvalidPoleSpec);
}

TEST(PlacePoles, ReferenceDesignHitsTargets) {
    const auto pl = reference_plant();
    const auto spec = PoleSpec::from_bandwidths(pl.specs);
    const auto k = afe::place_poles(pl.model, spec);
    EXPECT_EQ(k.provenance, afe::GainProvenance::state_space);
    const auto ev = afe::eigenvalues(afe::closed_loop_matrix(pl.model, k.k));
    EXPECT_LE(afe::eigenvalue_set_mismatch(ev, spec.poles()), 1e-6);
}

TEST(PlacePoles, ReferenceGainMatchesRobustPlacementOracle) {
    const auto pl = reference_plant();
    const auto k = afe::place_poles(pl.model, PoleSpec::from_bandwidths(pl.specs)).k;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_LE(rel_err(k(i, j), oracle::k_ss_reference(i, j)), 1e-6) << "k" << i + 1 << j + 1;
}

TEST(PlacePoles, ReferenceGainWithinFivePercentOfReferenceDesign) {
    const auto pl = reference_plant();
    const auto k = afe::place_poles(pl.model, PoleSpec::from_bandwidths(pl.specs));
    EXPECT_LE(afe::compare_gains(k.k, oracle::k_ss_design).max_relative_difference, 0.05);
}

TEST(PlacePoles, RandomPlantsAndTargets) {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(0.3, 3.0);
    for (int trial = 0; trial < 60; ++trial) {
        const auto pl = plant(oracle::random_specs(rng));
        const double wi = pl.specs.omega_i();
        std::vector<Eigenvalue> targets;
        switch (trial % 4) {
        case 0: // double pole as in the reference design
            targets = {{-wi * u(rng), 0.0}};
            targets.push_back(targets[0]);
            targets.emplace_back(-0.1 * wi * u(rng), 0.0);
            break;
        case 1: { // complex pair
            const double re = -wi * u(rng), im = wi * u(rng);
            targets = {{re, im}, {re, -im}, {-0.2 * wi * u(rng), 0.0}};
            break;
        }
        default:
            targets = {{-wi * u(rng), 0.0}, {-0.5 * wi * u(rng), 0.0}, {-0.1 * wi * u(rng), 0.0}};
        }
        const PoleSpec spec(targets);
        const auto k = afe::place_poles(pl.model, spec);
        const auto ev = afe::eigenvalues(afe::closed_loop_matrix(pl.model, k.k));
        EXPECT_LE(afe::eigenvalue_set_mismatch(ev, spec.poles()), 1e-6) << "trial " << trial;
    }
}

TEST(PlacePoles, GenericSystemsOfOtherShapes) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 4;
        const std::size_t m = 1 + trial % 2;
        const Matrix a = oracle::random_matrix(rng, n, n);
        const Matrix b = oracle::random_matrix(rng, n, m);
        std::vector<Eigenvalue> targets;
        for (std::size_t i = 0; i < n; ++i)
            targets.emplace_back(-1.0 - static_cast<double>(i), 0.0);
        const PoleSpec spec(targets);
        const Matrix k = afe::place_poles(a, b, spec);
        EXPECT_LE(afe::eigenvalue_set_mismatch(afe::eigenvalues(a - b * k), spec.poles()), 1e-6)
            << "n=" << n << " m=" << m;
    }
}

TEST(PlacePoles, FullInputMatrix) {
    const Matrix a{{0, 1}, {-2, -3}};
    const PoleSpec spec({{-5.0, 0.0}, {-5.0, 0.0}});
    const Matrix k = afe::place_poles(a, Matrix::identity(2), spec);
    EXPECT_LE(afe::eigenvalue_set_mismatch(afe::eigenvalues(a - k), spec.poles()), 1e-12);
}

TEST(PlacePoles, StructuralFailures) {
    const auto pl = reference_plant();
    const double w = -two_pi * 1000.0;
    EXPECT_THROW((void)afe::place_poles(pl.model, PoleSpec({{w, 0.0}, {w, 0.0}, {w, 0.0}})), afe::MultiplicityExceeded);
    const Matrix a{{-1, 0, 0}, {0, -2, 0}, {0, 0, -3}};
    const Matrix b{{1, 0}, {0, 1}, {0, 0}};
    EXPECT_THROW((void)afe::place_poles(a, b, PoleSpec({{-4.0, 0.0}, {-5.0, 0.0}, {-6.0, 0.0}})), afe::Uncontrollable);
    EXPECT_THROW((void)afe::place_poles(a, Matrix(3, 2), PoleSpec({{-4.0, 0.0}, {-5.0, 0.0}, {-6.0, 0.0}})),
                 afe::Uncontrollable);
    EXPECT_THROW((void)afe::place_poles(pl.model, PoleSpec(std::vector<Eigenvalue>{{-1.0, 0.0}})), afe::DimensionMismatch);
}

TEST(FdGains, ClosedForms) {
    const SystemSpecs s = SystemSpecs::reference();
    const auto g = afe::fd_gains(s);
    EXPECT_EQ(g.k_iq, s.omega_i() * s.l_in);
    EXPECT_EQ(g.k_id, (s.omega_i() + s.omega_v()) * s.l_in);
    EXPECT_EQ(g.k_v, s.omega_i() * s.omega_v() * s.c_dc / (s.omega_i() + s.omega_v()));
}

TEST(FdGainMatrix, ReferenceEntries) {
    const auto pl = reference_plant();
    const auto k = afe::fd_gain_matrix(pl.specs, pl.op);
    EXPECT_EQ(k.provenance, afe::GainProvenance::frequency_domain);
    EXPECT_LE(afe::compare_gains(k.k, oracle::k_fd_design).max_relative_difference, 0.01);
    // the q-loop diagonal carries the stabilizing sign
    EXPECT_LT(k.k(1, 1), 0.0);
    EXPECT_LT(rel_err(k.k(1, 1), -5.3282e-3), 1e-4);
    EXPECT_LT(rel_err(k.k(0, 2), -2.43360e-3), 1e-4);
    const auto g = afe::fd_gains(pl.specs);
    EXPECT_DOUBLE_EQ(k.k(0, 0), (pl.specs.r_s - g.k_id) / pl.specs.v_dc);
    EXPECT_DOUBLE_EQ(k.k(0, 1), -k.k(1, 0));
    EXPECT_DOUBLE_EQ(k.k(1, 2), pl.op.m_q / pl.specs.v_dc);
}

TEST(FdGainMatrix, ClosedLoopPolesMatchOracleAcrossLoad) {
    for (const auto& row : oracle::fd_closed_loop_poles_hz) {
        SystemSpecs s = SystemSpecs::reference();
        s.r_load /= row.power_scale;
        s.p_rated = s.v_dc * s.v_dc / s.r_load;
        const auto pl = plant(s);
        const auto k = afe::fd_gain_matrix(s, pl.op);
        const auto ev = afe::eigenvalues(afe::closed_loop_matrix(pl.model, k.k));
        for (const auto& e : ev)
            EXPECT_LE(std::abs(e.imag()), 1e-9 * std::abs(e));
        const auto got = sorted_real_hz(ev);
        for (std::size_t i = 0; i < 3; ++i)
            EXPECT_LE(rel_err(got[i], row.poles_hz[i]), 1e-5) << "power x" << row.power_scale << " pole " << i;
    }
}

TEST(FdGainMatrix, CurrentPolesLandExactly) {
    // the q-loop pole sits exactly at -w_i; only the d/voltage coupling shifts the other two
    const auto pl = reference_plant();
    const auto k = afe::fd_gain_matrix(pl.specs, pl.op);
    const auto ev = afe::eigenvalues(afe::closed_loop_matrix(pl.model, k.k));
    const double wi = pl.specs.omega_i();
    const bool has_wi = std::any_of(ev.begin(), ev.end(), [&](const Eigenvalue& e) { return std::abs(e + wi) < 1e-6 * wi; });
    EXPECT_TRUE(has_wi);
    for (const auto& e : ev)
        EXPECT_LT(e.real(), 0.0);
}

TEST(FdGainMatrix, DegenerateOperatingPoint) {
    afe::OperatingPoint op;
    op.v_dc = 400.0;
    EXPECT_THROW((void)afe::fd_gain_matrix(SystemSpecs::reference(), op), afe::DegenerateOperatingPoint);
}

TEST(CompareGains, MetricProperties) {
    const Matrix k1{{1.0, 0.0, -2.0}, {4.0, 0.0, 1.0}};
    const Matrix k2{{1.1, 0.0, -2.0}, {4.0, 0.0, 1.0}};
    const auto c = afe::compare_gains(k1, k2);
    EXPECT_NEAR(c.max_relative_difference, 0.1 / 1.1, 1e-15);
    EXPECT_EQ(c.worst_row, 0u);
    EXPECT_EQ(c.worst_col, 0u);
    EXPECT_EQ(c.relative_difference(0, 1), 0.0);
    EXPECT_EQ(afe::compare_gains(k1, k1).max_relative_difference, 0.0);
    EXPECT_EQ(afe::compare_gains(k2, k1).max_relative_difference, c.max_relative_difference);
    EXPECT_THROW((void)afe::compare_gains(k1, Matrix(3, 2)), afe::DimensionMismatch);
}

TEST(CompareGains, FrameworksAgreeAtReference) {
    const auto pl = reference_plant();
    const auto kss = afe::place_poles(pl.model, PoleSpec::from_bandwidths(pl.specs));
    const auto kfd = afe::fd_gain_matrix(pl.specs, pl.op);
    const auto c = afe::compare_gains(kss, kfd);
    EXPECT_LE(c.max_relative_difference, 0.02);
    EXPECT_EQ(c.worst_row, 0u);
    EXPECT_EQ(c.worst_col, 2u);
}
