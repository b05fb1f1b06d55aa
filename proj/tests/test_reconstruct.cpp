#include "tdxray/reconstruct.hpp"

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

GaussianBumpParams<2> wide_bump() {
    auto p = default_bump_params();
    p.sigma_x = 1.0;
    return p;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST(ChooseR, SandwichValues) {
    const double L = std::log(1e3);
    auto c = choose_R(1e-3, 0.5, 2);
    EXPECT_NEAR(c.lower, 1.5 * L, 1e-12);
    EXPECT_NEAR(c.upper, 0.75 * L / 4, 1e-12);
    EXPECT_TRUE(c.conflict);
    EXPECT_DOUBLE_EQ(c.R, c.upper);

    auto d = choose_R(1e-50, 0.99, 2);
    EXPECT_FALSE(d.conflict);
    EXPECT_NEAR(d.R, 3 * 0.01 * std::log(1e50), 1e-10);

    auto p = make_plan(1e-50, 0.99, 2);
    EXPECT_DOUBLE_EQ(p.R, d.R);
    EXPECT_DOUBLE_EQ(p.a, 4.0);
}

TEST(ChooseR, Errors) {
    EXPECT_EQ(kind_of([] { choose_R(0.5, 0.5, 2); }), ErrorKind::InfeasibleSandwich);
    EXPECT_EQ(kind_of([] { choose_R(0.0, 0.5, 2); }), ErrorKind::InfeasibleSandwich);
    EXPECT_EQ(kind_of([] { choose_R(1e-3, 1.0, 2); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([] { choose_R(1e-3, 0.0, 2); }), ErrorKind::InvalidArgument);
}

TEST(TailBound, PowerLaw) {
    EXPECT_NEAR(tail_bound(4.0, 5.0, 2, 3.0), 3.0 / 16.0, 1e-15);
    EXPECT_EQ(kind_of([] { tail_bound(4.0, 3.0, 2, 1.0); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([] { tail_bound(1.0, 5.0, 2, 1.0); }), ErrorKind::InvalidArgument);
}

TEST(Inversion, FullSpectrumRecoversTheSamples) {
    SpaceTimeGrid<2> g;
    auto truth = sample(gaussian_bump(wide_bump()), g);
    auto l = FrequencyLattice<2>::dual_of(g);
    auto s = fourier_from_samples(truth, g, l);
    ReconstructionPlan plan;
    plan.R = l.inscribed_radius();
    plan.keep_hidden = true;
    auto r = truncated_inversion(s, plan, g);
    double err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) err = std::max(err, std::abs(r.samples[i] - truth[i]));
    EXPECT_LT(err, 1e-10 * max_abs(truth));
    EXPECT_LT(r.imag_residual, 1e-10);
}

TEST(Inversion, TruncationIsAProjection) {
    SpaceTimeGrid<2> g;
    auto truth = sample(gaussian_bump(default_bump_params()), g);
    auto l = FrequencyLattice<2>::dual_of(g);
    ReconstructionPlan plan;
    plan.R = 2.5;
    auto once = truncated_inversion(fourier_from_samples(truth, g, l), plan, g);
    auto twice = truncated_inversion(fourier_from_samples(once.samples, g, l), plan, g);
    double d = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) d = std::max(d, std::abs(once.samples[i] - twice.samples[i]));
    EXPECT_LT(d, 1e-12 * max_abs(once.samples));
    EXPECT_GT(max_abs(once.samples), 0.01);
}

TEST(Inversion, PlanAndGridErrors) {
    SpaceTimeGrid<2> g;
    auto l = FrequencyLattice<2>::dual_of(g);
    SpectralField<2> s;
    s.lattice = l;
    s.values.assign(l.size(), Complex(0.0));
    ReconstructionPlan plan;
    plan.R = 8.0;
    EXPECT_EQ(kind_of([&] { truncated_inversion(s, plan, g); }), ErrorKind::RTooLargeForGrid);
    plan.R = 1.0;
    EXPECT_EQ(kind_of([&] { truncated_inversion(s, plan, g); }), ErrorKind::InvalidArgument);
    plan.R = 2.0;
    plan.a = 3.0;
    EXPECT_EQ(kind_of([&] { truncated_inversion(s, plan, g); }), ErrorKind::InvalidArgument);
}

TEST(Parseval, ErrorEqualsExcludedEnergy) {
    SpaceTimeGrid<2> g;
    auto truth = sample(gaussian_bump(default_bump_params()), g);
    for (double R : {1.5, 3.5}) {
        auto p = parseval_split(truth, g, R);
        EXPECT_GT(p.error_sq, 0.0);
        EXPECT_GT(p.hidden_in_ball, 0.0);
        EXPECT_LT(p.relative_gap, 1e-10);
    }
}

TEST(StabilityFit, ExactEnvelopeIsRecovered) {
    StabilityCurve c;
    for (double d : {1e-2, 1e-4, 1e-6, 1e-8}) {
        StabilityRow r;
        r.delta = d;
        r.l2_error = 2.0 / std::log(1.0 / d);
        r.feasible = true;
        c.rows.push_back(r);
    }
    StabilityRow bad;
    bad.delta = 0.3;
    bad.l2_error = 100.0;
    c.rows.push_back(bad);
    fit_log_envelope(c);
    EXPECT_EQ(c.fitted_rows, 4);
    EXPECT_NEAR(c.C_fit, 2.0, 1e-12);
    EXPECT_NEAR(c.C_envelope, 2.0, 1e-12);
    EXPECT_NEAR(c.r_squared, 1.0, 1e-12);
    EXPECT_TRUE(c.dominated);
    EXPECT_NEAR(c.rows[1].envelope, 2.0 / std::log(1e4), 1e-12);
}

TEST(StabilityFit, ScatterLowersRSquared) {
    StabilityCurve c;
    const double ds[] = {1e-2, 1e-4, 1e-6, 1e-8};
    const double noise[] = {1.3, 0.7, 1.2, 0.8};
    for (int i = 0; i < 4; ++i) {
        StabilityRow r;
        r.delta = ds[i];
        r.l2_error = noise[i] * 2.0 / std::log(1.0 / ds[i]);
        r.feasible = true;
        c.rows.push_back(r);
    }
    fit_log_envelope(c);
    EXPECT_LT(c.r_squared, 0.99);
    EXPECT_NEAR(c.C_envelope, 2.6, 1e-12);
    EXPECT_TRUE(c.dominated);
}

TEST(StabilityCurve, NoiseLevelsMustDecrease) {
    SpaceTimeGrid<2> g;
    auto f = gaussian_bump(default_bump_params());
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 5.0);
    EXPECT_EQ(kind_of([&] { stability_curve(f, g, body, {1e-3, 1e-2}, 0.5, 1); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { stability_curve(f, g, body, {-1.0}, 0.5, 1); }), ErrorKind::InvalidArgument);
}

TEST(VisibleSpectrum, SlicesMatchTransformAndAreHermitian) {
    SpaceTimeGrid<2> g;
    auto p = default_bump_params();
    auto f = gaussian_bump(p);
    auto l = FrequencyLattice<2>::dual_of(g);
    auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 5.0);
    auto v = visible_spectrum(f, l, 1.2, body, 5);
    ASSERT_FALSE(v.index.empty());
    auto exact = fourier_full(f, g, l);
    auto filled = v.field(0.0, 1.2);
    double peak = 0.0;
    for (auto z : exact.values) peak = std::max(peak, std::abs(z));
    for (std::size_t k = 0; k < v.index.size(); ++k) {
        auto q = l.point(v.index[k]);
        EXPECT_TRUE(in_ball(q, 1.2));
        EXPECT_EQ(classify_region(q), Region::Visible);
        EXPECT_LT(std::abs(v.clean[k] - exact.values[v.index[k]]), 1e-9 * peak);
    }
    EXPECT_LT(hermitian_residual(filled), 1e-14);
    EXPECT_GT(v.data_sup, 0.0);
    EXPECT_EQ(kind_of([&] { visible_spectrum(f, l, 9.0, body, 5); }), ErrorKind::RTooLargeForGrid);
}
