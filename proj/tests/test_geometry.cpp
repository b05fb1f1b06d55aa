#include "tdxray/conformal.hpp"
#include "tdxray/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tdxray;

namespace {

template <int Dim>
struct ConstantFactor {
    double c0 = 1.0;
    template <class S>
    S operator()(const S&, const std::array<S, Dim>&) const {
        return S(c0);
    }
};

/// Exit distance of x + s w from the ellipsoid sum (x_i/a_i)^2 = 1 (largest root).
template <int Dim>
double chord_oracle(const Vec<Dim>& x, const Vec<Dim>& w, const Vec<Dim>& axes) {
    double A = 0, B = 0, C = -1;
    for (int i = 0; i < Dim; ++i) {
        double a2 = axes[i] * axes[i];
        A += w[i] * w[i] / a2;
        B += 2 * x[i] * w[i] / a2;
        C += x[i] * x[i] / a2;
    }
    return (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);
}

}  // namespace

TEST(ConvexBody, BallAndEllipsoidLevelSets) {
    auto b = ConvexBody<2>::ball(Vec<2>::Zero(), 2.0);
    EXPECT_TRUE(b.inside(Vec<2>(1.0, 1.0)));
    EXPECT_FALSE(b.inside(Vec<2>(2.0, 0.5)));
    EXPECT_NEAR((b.normal(Vec<2>(0.0, 2.0)) - Vec<2>(0.0, 1.0)).norm(), 0.0, 1e-15);
    auto e = ConvexBody<3>::ellipsoid(Vec<3>::Zero(), Vec<3>(1.0, 2.0, 3.0));
    Vec<3> u = Vec<3>(1.0, 1.0, 1.0).normalized();
    EXPECT_NEAR(e.level(e.radial_boundary_point(u)), 0.0, 1e-12);
}

TEST(ExitTime, MatchesQuadraticRoot) {
    const Vec<2> axes(3.0, 1.5);
    auto body = ConvexBody<2>::ellipsoid(Vec<2>::Zero(), axes);
    for (int i = 0; i < 12; ++i) {
        double th = 2 * kPi * i / 12 + 0.1;
        Vec<2> x = body.radial_boundary_point(Vec<2>(std::cos(th), std::sin(th)));
        Vec<2> nu = body.normal(x);
        for (double a : {-1.2, 0.0, 0.9}) {
            Vec<2> w = std::cos(a) * (-nu) + std::sin(a) * Vec<2>(-nu[1], nu[0]);
            auto ray = make_ray(body, x, w);
            EXPECT_NEAR(exit_time(body, ray), chord_oracle<2>(x, w, axes), 1e-10);
        }
    }
}

TEST(ExitTime, TangentRayRejected) {
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 1.0);
    BoundaryRay<2> ray{Vec<2>(1.0, 0.0), Vec<2>(0.0, 1.0), Vec<2>(1.0, 0.0)};
    try {
        exit_time(body, ray);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TangentRay);
    }
}

TEST(InwardBundle, PointsOnBoundaryDirectionsInward) {
    auto body2 = ConvexBody<2>::ellipsoid(Vec<2>::Zero(), Vec<2>(2.0, 1.0));
    auto rays = sample_inward_bundle(body2, 10, 4);
    ASSERT_EQ(rays.size(), 40u);
    for (const auto& r : rays) {
        EXPECT_NEAR(body2.level(r.x), 0.0, 1e-12);
        EXPECT_NEAR(r.omega.norm(), 1.0, 1e-14);
        EXPECT_LT(r.omega.dot(r.normal), 0.0);
    }
    auto body3 = ConvexBody<3>::ball(Vec<3>::Zero(), 1.0);
    for (const auto& r : sample_inward_bundle(body3, 8, 3)) {
        EXPECT_NEAR(r.x.norm(), 1.0, 1e-12);
        EXPECT_LT(r.omega.dot(r.normal), 0.0);
    }
}

TEST(Geodesic, EuclideanIsTheChord) {
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 2.0);
    auto ray = sample_inward_bundle(body, 3, 3)[4];
    auto path = geodesic_trace(MetricSpec<2>::euclidean(), body, ray, 0.05);
    EXPECT_NEAR(path.exit_time, -2.0 * ray.x.dot(ray.omega), 1e-10);
    EXPECT_NEAR((path.position(0.7) - (ray.x + 0.7 * ray.omega)).norm(), 0.0, 1e-14);
}

TEST(Geodesic, ConstantFactorSlowsTheRay) {
    // metric c I with constant c: straight ray at speed c^{-1/2}
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 2.0);
    auto ray = sample_inward_bundle(body, 5, 3)[7];
    const double c0 = 1.44;
    auto path = geodesic_trace(MetricSpec<2>::conformal(ConstantFactor<2>{c0}), body, ray, 0.01);
    const double chord = -2.0 * ray.x.dot(ray.omega);
    EXPECT_NEAR(path.exit_time, chord * std::sqrt(c0), 1e-9);
    EXPECT_NEAR((path.position(1.0) - (ray.x + ray.omega / std::sqrt(c0))).norm(), 0.0, 1e-10);
}

TEST(Geodesic, HamiltonianConservedForStaticFactor) {
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 2.0);
    GaussianFactor<2> g;
    g.amplitude = 0.2;
    g.width = 0.8;
    g.center << 0.3, -0.2;
    auto metric = MetricSpec<2>::conformal(g);
    auto ray = sample_inward_bundle(body, 6, 3)[5];
    auto path = geodesic_trace(metric, body, ray, 0.01);
    double h0 = metric.hamiltonian(0.0, path.points.front(), path.momenta.front());
    for (std::size_t i = 0; i < path.points.size(); ++i)
        EXPECT_NEAR(metric.hamiltonian(path.times[i], path.points[i], path.momenta[i]), h0, 1e-9);
    EXPECT_NEAR(body.level(path.points.back()), 0.0, 1e-8);
}

TEST(Conformal, AdmissibilityReport) {
    auto f = make_factor<2>(ConstantFactor<2>{1.0}, 0.5, 0.1, 1.0);
    EXPECT_TRUE(check_admissible(f, Vec<2>(-1, -1), Vec<2>(1, 1)).ok);
    auto bad = make_factor<2>(ConstantFactor<2>{0.4}, 0.5, 1.0, 1.0);
    auto rep = check_admissible(bad, Vec<2>(-1, -1), Vec<2>(1, 1));
    EXPECT_FALSE(rep.ok);
    EXPECT_DOUBLE_EQ(rep.min_c, 0.4);
    GaussianFactor<2> g;
    g.amplitude = 0.1;
    auto [c, grad] = value_and_gradient<2>(g, 0.0, Vec<2>(0.5, 0.0));
    EXPECT_NEAR(c, 1.0 + 0.1 * std::exp(-0.25), 1e-15);
    EXPECT_NEAR(grad[0], -0.1 * 2 * 0.5 * std::exp(-0.25), 1e-15);
    EXPECT_NEAR(grad[1], 0.0, 1e-15);
}
