#include "tdxray/wavesim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <set>

using namespace tdxray;

namespace {

template <class Fn>
std::optional<ErrorKind> kind_of(Fn fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

/// C^5 pulse (4 s (1 - s))^6 on (0, 1), so u = phi(t - a x_1) has zero initial data on [0,1]^2.
double phi(double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : std::pow(4 * s * (1 - s), 6); }
double dphi(double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : 24.0 * std::pow(4 * s * (1 - s), 5) * (1 - 2 * s); }

ScalarFactor constant(double c0) {
    return [c0](double, const Vec<2>&) { return c0; };
}

/// Max interior error of the Dirichlet solve of u = phi(t - sqrt(c0) x_1) under the metric c0 * I.
double plane_wave_error(int N, double c0) {
    const double a = std::sqrt(c0);
    auto g = WaveGrid::with_cfl(N, 1.0);
    auto sol = solve_dirichlet(constant(c0), g, [a](double t, const Vec<2>& x) { return phi(t - a * x[0]); });
    double err = 0.0;
    for (int n = 0; n <= g.nt(); ++n)
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N; ++j) err = std::max(err, std::abs(sol.at(n, i, j) - phi(n * g.dt() - a * g.x(i))));
    return err;
}

/// Max error of the discrete DtN map against B du/dnu = sqrt(c0) phi'(t) on x = 0,
/// -sqrt(c0) phi'(t - sqrt(c0)) on x = 1 and 0 on the other sides (corners: mean of both sides).
double dtn_error(int N, double c0) {
    const double a = std::sqrt(c0);
    auto g = WaveGrid::with_cfl(N, 1.0);
    auto d = dtn_apply(constant(c0), g, [a](double t, const Vec<2>& x) { return phi(t - a * x[0]); });
    double err = 0.0;
    for (int n = 0; n <= g.nt(); ++n) {
        const double t = n * g.dt();
        for (int b = 0; b < g.boundary_count(); ++b) {
            auto [i, j] = g.boundary_node(b);
            double side = i == 0 ? a * dphi(t) : i == N ? -a * dphi(t - a) : 0.0;
            double exact = (j == 0 || j == N) && (i == 0 || i == N) ? 0.5 * side : side;
            err = std::max(err, std::abs(d.at(n, b) - exact));
        }
    }
    return err;
}

}  // namespace

TEST(WaveGrid, BoundaryWalk) {
    WaveGrid g = WaveGrid::with_cfl(8, 2.0);
    EXPECT_DOUBLE_EQ(g.k, 0.5 / 8);
    EXPECT_EQ(g.nt(), 32);
    EXPECT_NEAR(g.nt() * g.dt(), g.T, 1e-15);
    std::set<std::pair<int, int>> seen;
    for (int b = 0; b < g.boundary_count(); ++b) {
        auto [i, j] = g.boundary_node(b);
        auto [i2, j2] = g.boundary_node((b + 1) % g.boundary_count());
        EXPECT_TRUE(i == 0 || j == 0 || i == g.N || j == g.N);
        EXPECT_EQ(std::abs(i - i2) + std::abs(j - j2), 1);
        seen.insert({i, j});
    }
    EXPECT_EQ(seen.size(), 32u);
    auto r = g.refined();
    EXPECT_EQ(r.N, 16);
    EXPECT_DOUBLE_EQ(r.k, g.k / 2);
}

TEST(WaveGrid, PerimeterCoordinate) {
    EXPECT_DOUBLE_EQ(perimeter_coordinate(Vec<2>(0.25, 0.0)), 0.25);
    EXPECT_DOUBLE_EQ(perimeter_coordinate(Vec<2>(1.0, 0.5)), 1.5);
    EXPECT_DOUBLE_EQ(perimeter_coordinate(Vec<2>(0.75, 1.0)), 2.25);
    EXPECT_DOUBLE_EQ(perimeter_coordinate(Vec<2>(0.0, 0.5)), 3.5);
}

TEST(Solver, CflViolationIsRejected) {
    WaveGrid g = WaveGrid::with_cfl(16, 1.0, 0.8);
    EXPECT_EQ(kind_of([&] { solve_dirichlet(unit_factor(), g, dtn_probe(0, 1.0)); }), ErrorKind::CFLViolation);
    // slower medium: limit h sqrt(min c)/sqrt 2 shrinks below k = 0.5 h
    EXPECT_EQ(kind_of([&] { solve_dirichlet(constant(0.25), WaveGrid::with_cfl(16, 1.0), dtn_probe(0, 1.0)); }),
              ErrorKind::CFLViolation);
}

TEST(Solver, ZeroDataGivesZeroSolution) {
    auto g = WaveGrid::with_cfl(12, 1.0);
    auto sol = solve_dirichlet(unit_factor(), g, [](double, const Vec<2>&) { return 0.0; });
    for (double v : sol.u) EXPECT_EQ(v, 0.0);
}

TEST(Solver, PlaneWaveSecondOrder) {
    for (double c0 : {1.0, 1.21}) {
        double e16 = plane_wave_error(16, c0), e32 = plane_wave_error(32, c0);
        EXPECT_LT(e32, 0.02) << "c0 = " << c0;
        EXPECT_GT(e16 / e32, 3.5) << "c0 = " << c0;
    }
}

TEST(Solver, DtNMatchesNormalDerivative) {
    for (double c0 : {1.0, 1.21}) {
        double e16 = dtn_error(16, c0), e32 = dtn_error(32, c0);
        EXPECT_LT(e32, 0.05 * 4.5) << "c0 = " << c0;  // |phi'| peaks near 4.5
        EXPECT_GT(e16 / e32, 3.0) << "c0 = " << c0;
    }
}

TEST(Solver, BoundaryNorms) {
    auto g = WaveGrid::with_cfl(10, 2.0);
    auto one = sample_boundary([](double, const Vec<2>&) { return 1.0; }, g);
    EXPECT_NEAR(boundary_l2(one), std::sqrt(4.0 * 2.0), 1e-12);
    EXPECT_NEAR(boundary_h1(one), std::sqrt(4.0 * 2.0), 1e-12);
}

TEST(Probes, WindowsAndAppendOnly) {
    const double T = 2.0;
    auto p0 = dtn_probe(0, T), p1 = dtn_probe(1, T);
    const Vec<2> x(0.3, 0.0);
    EXPECT_EQ(p0(0.0, x), 0.0);
    EXPECT_EQ(p0(0.6 * T, x), 0.0);
    EXPECT_GT(p0(0.3 * T, x), 0.5);
    EXPECT_EQ(p1(0.2 * T, x), 0.0);
    EXPECT_GT(p1(0.55 * T, x), 0.5);
    auto a = dtn_probes(3, T), b = dtn_probes(6, T);
    for (int p = 0; p < 3; ++p) EXPECT_EQ(a[p](0.6, Vec<2>(1.0, 0.4)), b[p](0.6, Vec<2>(1.0, 0.4)));
    // mode 1: cos(2 pi s / 4) over the perimeter
    EXPECT_NEAR(dtn_probe(2, T)(0.3 * T, Vec<2>(1.0, 0.0)), std::cos(kPi / 2), 1e-12);
}

TEST(Rho, FactorsAndIdentity) {
    auto r = rho_factors(2.0, 2);
    EXPECT_DOUBLE_EQ(r.rho0, -1.0);
    EXPECT_DOUBLE_EQ(r.rho1, 1.0);
    EXPECT_DOUBLE_EQ(r.rho2, 0.0);
    EXPECT_DOUBLE_EQ(r.rho, 1.0);
    auto s = rho_factors(4.0, 3);
    EXPECT_NEAR(s.rho1, 7.0, 1e-14);
    EXPECT_NEAR(s.rho2, 1.0, 1e-14);
    EXPECT_NEAR(s.rho, 2.0 * 3.0, 1e-14);
    EXPECT_EQ(kind_of([] { rho_factors(0.0, 2); }), ErrorKind::InvalidArgument);
}

TEST(Conformal, DefectIsLinearInStrength) {
    auto g = WaveGrid::with_cfl(24, 2.0);
    double a = factor_defect_l2(scalar_factor(interior_bump(0.05)), g);
    double b = factor_defect_l2(scalar_factor(interior_bump(0.10)), g);
    EXPECT_GT(a, 0.0);
    EXPECT_NEAR(b, 2.0 * a, 1e-14);
    EXPECT_EQ(factor_defect_l2(unit_factor(), g), 0.0);
}

TEST(Conformal, EqualFactorsHaveEqualMaps) {
    auto g = WaveGrid::with_cfl(12, 2.0);
    auto est = dtn_norm_diff(unit_factor(), unit_factor(), g, dtn_probes(2, 2.0));
    EXPECT_EQ(est.value, 0.0);
    auto bump = scalar_factor(interior_bump(0.1));
    EXPECT_GT(dtn_norm_diff(unit_factor(), bump, g, dtn_probes(2, 2.0)).value, 0.0);
    EXPECT_EQ(kind_of([&] { dtn_norm_diff(unit_factor(), bump, g, {}); }), ErrorKind::InvalidArgument);
}

TEST(KeyIdentity, GapShrinksUnderRefinement) {
    auto c = scalar_factor(interior_bump(0.05));
    WaveGrid g = WaveGrid::with_cfl(12, 2.0);
    auto coarse = key_identity_check(c, g, identity_f1(), identity_f2());
    auto fine = key_identity_check(c, g.refined(), identity_f1(), identity_f2());
    EXPECT_NE(fine.lhs, 0.0);
    EXPECT_LT(fine.gap, coarse.gap);
    EXPECT_LT(fine.gap, 0.1);
}
