#include "tdxray/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tdxray;

namespace {

/// Transform of the uncut separable Gaussian bump.
Complex bump_hat(const GaussianBumpParams<2>& p, double tau, const Vec<2>& xi) {
    const double s = std::sqrt(2 * kPi);
    Complex v = p.amplitude * s * p.sigma_t * std::exp(Complex(-0.5 * std::pow(p.sigma_t * tau, 2), -tau * p.t0));
    for (int a = 0; a < 2; ++a)
        v *= s * p.sigma_x * std::exp(Complex(-0.5 * std::pow(p.sigma_x * xi[a], 2), -xi[a] * p.center[a]));
    return v;
}

/// Trapezoid sums on a grid see the transform periodized by the sampling frequencies.
Complex periodized_hat(const GaussianBumpParams<2>& p, const SpaceTimeGrid<2>& g, double tau, const Vec<2>& xi) {
    Complex v = 0.0;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c)
                v += bump_hat(p, tau + 2 * kPi * a / g.dt, xi + (2 * kPi / g.dx) * Vec<2>(b, c));
    return v;
}

FrequencyPoint<2> fp(double tau, double x, double y) {
    FrequencyPoint<2> p;
    p.tau = tau;
    p.xi << x, y;
    return p;
}

}  // namespace

TEST(Lattice, DualOfDefaultGrid) {
    SpaceTimeGrid<2> g;
    auto l = FrequencyLattice<2>::dual_of(g);
    EXPECT_DOUBLE_EQ(l.dtau, 2 * kPi / 25.6);
    EXPECT_DOUBLE_EQ(l.dxi, 2 * kPi / 16.0);
    EXPECT_DOUBLE_EQ(l.tau(32), 0.0);
    EXPECT_DOUBLE_EQ(l.xi_axis(32), 0.0);
    EXPECT_NEAR(l.dtau / l.dxi, 0.625, 1e-15);
    EXPECT_NEAR(l.inscribed_radius(), std::min(31 * l.dtau, 31 * l.dxi), 1e-12);
    EXPECT_EQ(l.size(), 64u * 64u * 64u);
}

TEST(Fourier, LatticeTransformMatchesClosedForm) {
    auto p = default_bump_params();
    SpaceTimeGrid<2> g;
    auto l = FrequencyLattice<2>::dual_of(g);
    auto s = fourier_full(gaussian_bump(p), g, l);
    double worst = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        auto q = l.point(i);
        Complex e = periodized_hat(p, g, q.tau, q.xi);
        worst = std::max(worst, std::abs(s.values[i] - e));
        peak = std::max(peak, std::abs(e));
    }
    EXPECT_LT(worst, 1e-11 * peak);
}

TEST(Fourier, PointEvaluationOffLattice) {
    auto p = default_bump_params();
    SpaceTimeGrid<2> g;
    auto samples = sample(gaussian_bump(p), g);
    for (auto q : {fp(0.3, -0.7, 1.1), fp(-1.9, 2.2, 0.05), fp(0.0, 0.0, 0.0)}) {
        Complex e = bump_hat(p, q.tau, q.xi);
        EXPECT_LT(std::abs(fourier_at(samples, g, q) - e), 1e-9 * (1.0 + std::abs(e)));
    }
}

TEST(Fourier, RealFieldIsHermitian) {
    auto p = default_bump_params();
    SpaceTimeGrid<2> g;
    auto l = FrequencyLattice<2>::dual_of(g);
    auto s = fourier_full(gaussian_bump(p), g, l);
    EXPECT_LT(hermitian_residual(s), 1e-12);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < l.size(); i += 37) {
        std::size_t m = s.mirror(i);
        if (m >= l.size()) continue;
        ++checked;
        EXPECT_EQ(s.mirror(m), i);
        auto a = l.point(i), b = l.point(m);
        EXPECT_NEAR(a.tau + b.tau, 0.0, 1e-12);
        EXPECT_NEAR((a.xi + b.xi).norm(), 0.0, 1e-12);
    }
    EXPECT_GT(checked, 1000u);
}

TEST(Fourier, UnderResolvedFieldIsFlagged) {
    auto p = default_bump_params();
    p.sigma_x = 0.1;
    SpaceTimeGrid<2> g;
    try {
        fourier_full(gaussian_bump(p), g, FrequencyLattice<2>::dual_of(g), true);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AliasingSuspected);
    }
    EXPECT_NO_THROW(fourier_full(gaussian_bump(default_bump_params()), g, FrequencyLattice<2>::dual_of(g), true));
}

TEST(Regions, ClassificationAndConeTies) {
    EXPECT_EQ(classify_region(fp(0.5, 1.0, 0.0)), Region::Visible);
    EXPECT_EQ(classify_region(fp(2.0, 1.0, 1.0)), Region::Hidden);
    EXPECT_EQ(classify_region(fp(-5.0, 3.0, 4.0)), Region::Visible);
    EXPECT_EQ(classify_region(fp(0.0, 0.0, 0.0)), Region::Visible);
    EXPECT_EQ(classify_region(fp(1e-300, 0.0, 0.0)), Region::Hidden);
}

TEST(Regions, VisibleDirectionSolvesTheConstraint) {
    for (int i = 0; i < 200; ++i) {
        double x = hashed_uniform(3, i, 0) * 4, y = hashed_uniform(3, i, 1) * 4;
        double tau = hashed_uniform(3, i, 2) * std::hypot(x, y);
        auto q = fp(tau, x, y);
        Vec<2> w = visible_direction(q);
        EXPECT_NEAR(w.norm(), 1.0, 1e-14);
        EXPECT_NEAR(w.dot(q.xi), -tau, 1e-13);
        Vec<2> wm = visible_direction(fp(-tau, -x, -y));
        EXPECT_NEAR((w - wm).norm(), 0.0, 1e-14);
    }
    Vec<2> w = visible_direction(fp(5.0, 3.0, 4.0));
    EXPECT_NEAR((w - Vec<2>(-0.6, -0.8)).norm(), 0.0, 1e-14);
    Vec<3> w3 = visible_direction(FrequencyPoint<3>{0.5, Vec<3>(0.3, -1.0, 0.2)});
    EXPECT_NEAR(w3.dot(Vec<3>(0.3, -1.0, 0.2)), -0.5, 1e-14);
}

TEST(Regions, DirectionErrors) {
    try {
        visible_direction(fp(1.0, 0.0, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroXi);
    }
    try {
        visible_direction(fp(2.0, 1.0, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotVisible);
    }
}

TEST(Regions, HiddenBoundFormula) {
    EXPECT_EQ(hidden_bound(3.0, 0.0, 2.0), 0.0);
    EXPECT_NEAR(hidden_bound(3.0, 1e-3, 2.0), 2.0 * std::exp(1.0) * std::cbrt(1.0 / 3.0) * 1e-2, 1e-15);
    EXPECT_DOUBLE_EQ(hidden_bound(-3.0, 1e-3, 2.0), hidden_bound(3.0, 1e-3, 2.0));
}

TEST(Slice, LineDataReproducesTransformOnTheCone) {
    auto p = default_bump_params();
    auto f = gaussian_bump(p);
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 5.0);
    const Vec<2> w = Vec<2>(0.8, -0.6);
    auto d = line_data(f, w, body, 0.25);
    for (double k : {-2.0, 0.0, 0.7, 3.1}) {
        Vec<2> xi = k * Vec<2>(0.6, 0.8) + 0.9 * w;  // any xi, tau = -omega . xi
        Complex e = bump_hat(p, -w.dot(xi), xi);
        EXPECT_LT(std::abs(slice(d, xi) - e), 1e-9 * (1.0 + std::abs(e)));
    }
}
