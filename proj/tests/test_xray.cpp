#include "tdxray/xray.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tdxray;

namespace {

/// int_0^inf A exp(-(s-t0)^2/(2 st^2)) exp(-|x + s w - c|^2/(2 sx^2)) ds in closed form.
double gaussian_line_integral(const GaussianBumpParams<2>& p, const Vec<2>& x, const Vec<2>& w) {
    const double a = 1.0 / (p.sigma_t * p.sigma_t) + 1.0 / (p.sigma_x * p.sigma_x);
    const Vec<2> r = x - p.center;
    const double b = p.t0 / (p.sigma_t * p.sigma_t) - w.dot(r) / (p.sigma_x * p.sigma_x);
    const double c = p.t0 * p.t0 / (p.sigma_t * p.sigma_t) + r.squaredNorm() / (p.sigma_x * p.sigma_x);
    return p.amplitude * std::exp(-0.5 * (c - b * b / a)) * std::sqrt(kPi / (2 * a)) *
           std::erfc(-b / std::sqrt(2 * a));
}

}  // namespace

TEST(XraySingle, ConstantFieldGivesChordLength) {
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 3.0);
    auto f = constant_field<2>(2.5, 20.0, 3.0);
    for (const auto& ray : sample_inward_bundle(body, 7, 3)) {
        auto path = geodesic_trace(MetricSpec<2>::euclidean(), body, ray, 0.05);
        EXPECT_NEAR(xray_single(f, path), 2.5 * (-2.0 * ray.x.dot(ray.omega)), 1e-9);
    }
}

TEST(XraySingle, LinearInTimeField) {
    // f(t, x) = t + x_1 along x + s w: integral tau^2/2 + tau x_1 + w_1 tau^2/2
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 2.0);
    SpaceTimeField<2> f = zero_field<2>(10.0, 2.0);
    f.evaluator = [](double t, const Vec<2>& x) { return t + x[0]; };
    for (const auto& ray : sample_inward_bundle(body, 5, 2)) {
        auto path = geodesic_trace(MetricSpec<2>::euclidean(), body, ray, 0.05);
        double tau = path.exit_time;
        double expect = 0.5 * tau * tau + tau * ray.x[0] + 0.5 * ray.omega[0] * tau * tau;
        EXPECT_NEAR(xray_single(f, path), expect, 1e-9);
    }
}

TEST(Sinogram, ZeroFieldIsZero) {
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 2.0);
    auto rays = sample_inward_bundle(body, 6, 3);
    auto s = sinogram(zero_field<2>(10.0, 1.0), rays, MetricSpec<2>::euclidean(), body);
    ASSERT_EQ(s.values.size(), rays.size());
    for (double v : s.values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(s.sup_norm, 0.0);
}

TEST(Sinogram, NoiseIsBoundedAndDeterministic) {
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 2.0);
    auto rays = sample_inward_bundle(body, 8, 4);
    auto s = sinogram(constant_field<2>(1.0, 10.0, 1.0), rays, MetricSpec<2>::euclidean(), body);
    auto a = perturb_sinogram(s, 1e-3, 7);
    auto b = perturb_sinogram(s, 1e-3, 7);
    auto c = perturb_sinogram(s, 1e-3, 8);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    EXPECT_LE(a.noise_sup, 1e-3);
    EXPECT_GT(a.noise_sup, 0.0);
    for (std::size_t i = 0; i < s.values.size(); ++i) EXPECT_LE(std::abs(a.values[i] - s.values[i]), 1e-3);
    EXPECT_THROW(perturb_sinogram(s, -1.0, 0), Error);
}

TEST(LineData, MatchesClosedFormGaussianIntegral) {
    auto p = default_bump_params();
    auto f = gaussian_bump(p);
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 5.0);
    const Vec<2> w = Vec<2>(0.6, 0.8);
    auto d = line_data(f, w, body, 0.25);
    ASSERT_EQ(d.values.size(), d.p_count() * static_cast<std::size_t>(d.nh));
    double worst = 0.0, peak = 0.0;
    for (int ih = 0; ih < d.nh; ih += 3)
        for (std::size_t ip = 0; ip < d.p_count(); ip += 2) {
            double exact = gaussian_line_integral(p, d.start_point(ip, ih), d.omega);
            worst = std::max(worst, std::abs(d.values[static_cast<std::size_t>(ih) * d.p_count() + ip] - exact));
            peak = std::max(peak, exact);
        }
    EXPECT_GT(peak, 0.1);
    EXPECT_LT(worst, 1e-9);
}

TEST(LineData, SupportOutsideBodyIsCoverageError) {
    auto p = default_bump_params();
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 3.0);
    try {
        line_data(gaussian_bump(p), Vec<2>(1.0, 0.0), body);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CoverageError);
    }
}

TEST(LineData, FrameIsOrthonormal) {
    Vec<3> w = Vec<3>(0.2, -0.5, 0.7).normalized();
    auto e = orthonormal_complement<3>(w);
    EXPECT_NEAR(e[0].dot(w), 0.0, 1e-15);
    EXPECT_NEAR(e[1].dot(w), 0.0, 1e-15);
    EXPECT_NEAR(e[0].dot(e[1]), 0.0, 1e-15);
    EXPECT_NEAR(e[0].norm(), 1.0, 1e-15);
    EXPECT_NEAR(e[1].norm(), 1.0, 1e-15);
}
