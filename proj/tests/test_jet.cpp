#include "tdxray/jet.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

using namespace tdxray;

using J2 = Jet<double, 2, 3>;

// Taylor coefficient of y^a of g around 0 by central finite differences is
// replaced by closed forms where available.

TEST(Jet, LayoutCountsMonomials) {
    EXPECT_EQ((Jet<double, 2, 3>::size), 10u);
    EXPECT_EQ((Jet<double, 3, 3>::size), 20u);
    EXPECT_EQ((Jet<double, 1, 4>::size), 5u);
}

TEST(Jet, ProductMatchesPolynomialExpansion) {
    J2 x = J2::variable(0, 1.0), y = J2::variable(1, 2.0);
    J2 p = x * x * y;  // (1+a)^2 (2+b) = 2 + 4a + b + 2a^2 + 2ab + a^2 b
    EXPECT_DOUBLE_EQ(p.value(), 2.0);
    EXPECT_DOUBLE_EQ(p.coeff({1, 0}), 4.0);
    EXPECT_DOUBLE_EQ(p.coeff({0, 1}), 1.0);
    EXPECT_DOUBLE_EQ(p.coeff({2, 0}), 2.0);
    EXPECT_DOUBLE_EQ(p.coeff({1, 1}), 2.0);
    EXPECT_DOUBLE_EQ(p.coeff({2, 1}), 1.0);
    EXPECT_DOUBLE_EQ(p.coeff({0, 2}), 0.0);
}

TEST(Jet, ElementaryFunctionsMatchTaylorSeries) {
    using J1 = Jet<double, 1, 4>;
    const double x0 = 0.7;
    J1 x = J1::variable(0, x0);
    auto check = [&](const J1& j, auto d) {
        double fact = 1.0;
        for (int k = 0; k <= 4; ++k) {
            if (k) fact *= k;
            EXPECT_NEAR(j.coeff({k}), d(k) / fact, 1e-13) << "order " << k;
        }
    };
    check(exp(x), [&](int) { return std::exp(x0); });
    check(sin(x), [&](int k) { return std::sin(x0 + k * M_PI / 2); });
    check(cos(x), [&](int k) { return std::cos(x0 + k * M_PI / 2); });
    check(log(x), [&](int k) {
        if (k == 0) return std::log(x0);
        double f = 1.0;
        for (int i = 1; i < k; ++i) f *= -i;
        return f / std::pow(x0, k);
    });
    check(pow(x, 1.5), [&](int k) {
        double f = 1.0;
        for (int i = 0; i < k; ++i) f *= 1.5 - i;
        return f * std::pow(x0, 1.5 - k);
    });
    check(1.0 / x, [&](int k) {
        double f = 1.0;
        for (int i = 1; i <= k; ++i) f *= -i;
        return f / std::pow(x0, k + 1);
    });
}

TEST(Jet, EvaluateReproducesFunctionToTruncationOrder) {
    J2 x = J2::variable(0, 0.3), y = J2::variable(1, -0.2);
    J2 f = exp(x) * sin(y) + sqrt(x * x + y * y + 1.0);
    for (double h : {1e-1, 5e-2}) {
        std::array<double, 2> d{h, -h};
        double exact = std::exp(0.3 + h) * std::sin(-0.2 - h) + std::sqrt(std::pow(0.3 + h, 2) + std::pow(-0.2 - h, 2) + 1.0);
        EXPECT_LT(std::abs(f.evaluate(d) - exact), 2.0 * h * h * h * h);
    }
}

TEST(Jet, DerivativeShiftsCoefficients) {
    J2 x = J2::variable(0, 0.0), y = J2::variable(1, 0.0);
    J2 p = x * x * x + 3.0 * x * y + y * y;
    J2 dx = p.derivative(0);  // 3x^2 + 3y
    EXPECT_DOUBLE_EQ(dx.coeff({2, 0}), 3.0);
    EXPECT_DOUBLE_EQ(dx.coeff({0, 1}), 3.0);
    EXPECT_DOUBLE_EQ(dx.coeff({3, 0}), 0.0);
    J2 r = p.restrict_zero(1);
    EXPECT_DOUBLE_EQ(r.coeff({3, 0}), 1.0);
    EXPECT_DOUBLE_EQ(r.coeff({1, 1}), 0.0);
    EXPECT_DOUBLE_EQ(p.truncate(2).coeff({3, 0}), 0.0);
}

TEST(Jet, ComplexJetsDivide) {
    using C = std::complex<double>;
    using JC = Jet<C, 1, 3>;
    JC z = JC::variable(0, C(1.0, 1.0));
    JC q = C(1.0) / z;
    // 1/(z0 + y) = sum (-1)^k y^k / z0^{k+1}
    for (int k = 0; k <= 3; ++k) EXPECT_LT(std::abs(q.coeff({k}) - std::pow(C(-1.0), k) / std::pow(C(1.0, 1.0), k + 1)), 1e-14);
}
