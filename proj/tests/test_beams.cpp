#include "tdxray/beams.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <optional>

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

BoundaryRay<2> left_ray() {
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 1.0);
    return make_ray(body, Vec<2>(-1.0, 0.0), Vec<2>(1.0, 0.0));
}

BeamParams params(double duration = 1.5) {
    BeamParams p;
    p.duration = duration;
    return p;
}

}  // namespace

TEST(Beam, FreeSpaceClosedForms) {
    auto cf = make_factor<2>(UnitFactor<2>{}, 0.5, 0.1, 2.0);
    auto b = build_beam(cf, left_ray(), 0.0, params());
    for (std::size_t k = 0; k < b.times.size(); k += 25) {
        const double s = b.times[k];
        const Complex z(1.0, -s);
        const auto M = b.hessian(k);
        EXPECT_NEAR(std::abs(M(1, 1) - Complex(0.0, 1.0) / z), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(M(0, 0) - Complex(0.0, 1.0)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(M(0, 1)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(b.states[k].A0 - std::pow(z, -0.5)), 0.0, 1e-10);
        EXPECT_NEAR((b.states[k].x - Vec<2>(-1.0 + s, 0.0)).norm(), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(b.states[k].D.value()), 0.0, 1e-12);
        EXPECT_NEAR(b.hamiltonian(k), 1.0, 1e-12);
        EXPECT_GT(b.min_eig_im(k), 0.0);
    }
    EXPECT_NEAR((b.center(0.7301) - Vec<2>(-1.0 + 0.7301, 0.0)).norm(), 0.0, 1e-12);
}

TEST(Beam, ValueOnTheCenterCurve) {
    auto cf = make_factor<2>(UnitFactor<2>{}, 0.5, 0.1, 2.0);
    auto p = params();
    auto b = build_beam(cf, left_ray(), 0.0, p);
    const double s = 0.9;
    Complex v = beam_evaluate(b, p, s, Vec<2>(-1.0 + s, 0.0));
    EXPECT_NEAR(std::abs(v - std::sqrt(p.lambda / kPi) * std::pow(Complex(1.0, -s), -0.5)), 0.0, 1e-9);
    // transverse Gaussian decay exp(-lambda Im(M22) y^2 / 2)
    const double y = 0.1;
    Complex w = beam_evaluate(b, p, s, Vec<2>(-1.0 + s, y));
    double decay = std::exp(-0.5 * p.lambda * (Complex(0.0, 1.0) / Complex(1.0, -s)).imag() * y * y);
    EXPECT_NEAR(std::abs(w) / std::abs(v), decay, 1e-9);
}

TEST(Beam, HamiltonianConservedInStaticMedium) {
    GaussianFactor<2> g;
    g.amplitude = 0.05;
    g.width = 0.5;
    g.center << 0.0, 0.15;
    auto cf = make_factor<2>(g, 0.5, 1.0, 2.0);
    auto b = build_beam(cf, left_ray(), 0.0, params());
    const double h0 = b.hamiltonian(0);
    EXPECT_NEAR(h0, 1.0 / std::sqrt(cf(0.0, Vec<2>(-1.0, 0.0))), 1e-15);
    for (std::size_t k = 0; k < b.times.size(); ++k) {
        EXPECT_NEAR(b.hamiltonian(k), h0, 1e-9);
        EXPECT_GT(b.min_eig_im(k), 0.0);
    }
    EXPECT_GT(std::abs(b.states.back().x[1]), 1e-3);  // bent by the medium
}

TEST(BoxFd, QuadraticPolynomials) {
    UnitFactor<2> c;
    auto t2 = [](double t, const Vec<2>&) { return Complex(t * t); };
    auto x2 = [](double, const Vec<2>& x) { return Complex(x[0] * x[0]); };
    auto tx = [](double t, const Vec<2>& x) { return Complex(t * x[1]); };
    const Vec<2> x(0.3, -0.2);
    EXPECT_NEAR(std::abs(box_fd<2>(c, t2, 0.4, x, 1e-2) - 2.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(box_fd<2>(c, x2, 0.4, x, 1e-2) + 2.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(box_fd<2>(c, tx, 0.4, x, 1e-2)), 0.0, 1e-9);
}

TEST(BoxFd, PlaneWaveIsAnnihilated) {
    UnitFactor<2> c;
    const double lam = 20.0;
    auto u = [lam](double t, const Vec<2>& x) { return std::exp(Complex(0.0, lam * (t - 0.6 * x[0] - 0.8 * x[1]))); };
    EXPECT_LT(std::abs(box_fd<2>(c, u, 0.2, Vec<2>(0.1, 0.4), 1e-3)), 1e-6 * lam * lam);
}

TEST(Residual, FreeSpaceSlopeIsQuarterDimension) {
    auto cf = make_factor<2>(UnitFactor<2>{}, 0.5, 0.1, 2.0);
    auto b = build_beam(cf, left_ray(), 0.0, params());
    auto rep = residual_scaling(b, {16.0, 32.0, 64.0, 128.0}, 3, 7);
    EXPECT_NEAR(rep.slope, 0.5, 0.05);
    EXPECT_LT(rep.max_halving_change, 0.05);
    EXPECT_EQ(kind_of([&] { residual_scaling(b, {16.0, 32.0, 64.0}); }), ErrorKind::InvalidArgument);
}

TEST(FitSlope, PowerLaw) {
    std::vector<double> x{2, 3, 5, 7, 11}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 1.7));
    EXPECT_NEAR(fit_slope(x, y), 1.7, 1e-12);
}

TEST(Cutoff, OneOnTubeZeroOutside) {
    auto cf = make_factor<2>(UnitFactor<2>{}, 0.5, 0.1, 2.0);
    auto p = params();
    auto b = build_beam(cf, left_ray(), 0.0, p);
    auto chi = cutoff_build(p, b);
    EXPECT_NEAR(chi.r1, std::pow(1e-2, 1.0 / 8.0), 1e-15);
    EXPECT_NEAR(chi.r2, std::sqrt(2.0) * chi.r1, 1e-15);
    const double s = 0.8;
    const Vec<2> c = b.center(s);
    EXPECT_NEAR(chi.tube_distance(s, c), 0.0, 1e-12);
    EXPECT_EQ(chi(s, c), 1.0);
    EXPECT_EQ(chi(s, c + Vec<2>(0.0, 0.99 * chi.r1)), 1.0);
    EXPECT_EQ(chi(s, c + Vec<2>(0.0, 1.01 * chi.r2)), 0.0);
    double prev = 1.0;
    for (int k = 0; k <= 20; ++k) {
        double v = chi(s, c + Vec<2>(0.0, chi.r1 + (chi.r2 - chi.r1) * k / 20.0));
        EXPECT_LE(v, prev);
        prev = v;
    }
    p.alpha = 1.0;
    EXPECT_EQ(kind_of([&] { cutoff_build(p, b); }), ErrorKind::InvalidArgument);
}

TEST(Concentration, NormalizedGaussianIntegrals) {
    auto cf = make_factor<2>(UnitFactor<2>{}, 0.5, 0.1, 2.0);
    auto p = params();
    auto b = build_beam(cf, left_ray(), 0.0, p);
    const double t = 0.6;
    auto one = [](double, const Vec<2>&) { return 1.0; };
    auto lin = [](double, const Vec<2>& x) { return 2.0 + x[0] - 3.0 * x[1]; };
    CMat<2> B = CMat<2>::Identity();
    B(0, 0) = Complex(1.0, 0.5);
    B(0, 1) = B(1, 0) = Complex(0.2, -0.1);
    for (const auto& r : gaussian_concentration(one, b, B, p, t, {16.0, 64.0}, false))
        EXPECT_NEAR(std::abs(r.value - 1.0), 0.0, 1e-10);
    const Vec<2> xc = b.center(t);
    for (const auto& r : gaussian_concentration(lin, b, B, p, t, {16.0}, false))
        EXPECT_NEAR(std::abs(r.value - (2.0 + xc[0] - 3.0 * xc[1])), 0.0, 1e-10);
    CMat<2> bad = -CMat<2>(CMat<2>::Identity());
    EXPECT_EQ(kind_of([&] { gaussian_concentration(one, b, bad, p, t, {16.0}); }), ErrorKind::InvalidArgument);
}

TEST(Beam, ParameterAndAdmissibilityErrors) {
    auto cf = make_factor<2>(UnitFactor<2>{}, 0.5, 0.1, 2.0);
    auto p = params();
    p.lambda = 1.0;
    EXPECT_EQ(kind_of([&] { build_beam(cf, left_ray(), 0.0, p); }), ErrorKind::InvalidArgument);
    p = params();
    p.sigma = 0.5;
    EXPECT_EQ(kind_of([&] { build_beam(cf, left_ray(), 0.0, p); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { build_beam(cf, left_ray(), -1.0, params()); }), ErrorKind::InvalidArgument);
    auto tight = make_factor<2>(UnitFactor<2>{}, 1.5, 0.1, 2.0);
    EXPECT_EQ(kind_of([&] { build_beam(tight, left_ray(), 0.0, params()); }), ErrorKind::Inadmissible);
}
