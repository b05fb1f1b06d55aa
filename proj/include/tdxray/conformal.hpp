#pragma once

// Conformal factors c(t, x). A factor is any object with
//     template <class S> S operator()(const S& t, const std::array<S, Dim>& x) const
// so that it can be evaluated on doubles and on Taylor jets alike.

#include "tdxray/core.hpp"
#include "tdxray/jet.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace tdxray {

template <int Dim>
struct UnitFactor {
    template <class S>
    S operator()(const S& /*t*/, const std::array<S, Dim>& /*x*/) const {
        return S(1.0);
    }
};

/// Smooth compactly supported profile exp(1 - 1/(1 - r^2)) for r < 1, else 0.
template <class S>
S compact_bump(const S& r2) {
    using std::exp;
    if (scalar_value(r2) >= 1.0) return S(0.0);
    return exp(S(1.0) - S(1.0) / (S(1.0) - r2));
}

/// c = 1 + strength * bump(|x - center| / radius) * (1 + time_amp * sin(time_freq * t)).
/// Equal to 1 outside the ball, so c = 1 near the boundary when the ball is interior.
template <int Dim>
struct BumpFactor {
    double strength = 0.0;
    Vec<Dim> center = Vec<Dim>::Zero();
    double radius = 0.3;
    double time_amp = 0.0;
    double time_freq = 0.0;

    template <class S>
    S operator()(const S& t, const std::array<S, Dim>& x) const {
        using std::sin;
        S r2(0.0);
        for (int i = 0; i < Dim; ++i) {
            S d = (x[i] - center[i]) / radius;
            r2 += d * d;
        }
        S b = compact_bump(r2);
        if (time_amp != 0.0) b = b * (S(1.0) + time_amp * sin(t * time_freq));
        return S(1.0) + b * strength;
    }
};

/// c = 1 + amplitude * exp(-|x - center|^2 / width^2); time-independent.
template <int Dim>
struct GaussianFactor {
    double amplitude = 0.1;
    Vec<Dim> center = Vec<Dim>::Zero();
    double width = 1.0;
    double time_amp = 0.0;

    template <class S>
    S operator()(const S& t, const std::array<S, Dim>& x) const {
        using std::exp;
        S r2(0.0);
        for (int i = 0; i < Dim; ++i) {
            S d = (x[i] - center[i]) / width;
            r2 += d * d;
        }
        S g = exp(-r2);
        if (time_amp != 0.0) g = g * (S(1.0) + t * time_amp);
        return S(1.0) + g * amplitude;
    }
};

template <int Dim>
std::array<double, Dim> to_array(const Vec<Dim>& v) {
    std::array<double, Dim> a{};
    for (int i = 0; i < Dim; ++i) a[i] = v[i];
    return a;
}

/// c and its spatial gradient at (t, x), via first-order jets.
template <int Dim, class Fn>
std::pair<double, Vec<Dim>> value_and_gradient(const Fn& c, double t, const Vec<Dim>& x) {
    using J = Jet<double, Dim, 1>;
    std::array<J, Dim> xj;
    for (int i = 0; i < Dim; ++i) xj[i] = J::variable(i, x[i]);
    J v = c(J(t), xj);
    Vec<Dim> g;
    for (int i = 0; i < Dim; ++i) g[i] = v[1 + static_cast<std::size_t>(i)];
    return {v.value(), g};
}

/// A conformal factor together with the class-A bounds it is claimed to satisfy.
template <int Dim, class Fn>
struct ConformalFactor {
    Fn c;
    double m0 = 0.5;   // lower bound on c
    double M0 = 1e3;   // bound on the C^{n+3} norm (recorded, not sampled)
    double eps = 1.0;  // bound on ||c - 1||_{C^1}
    double T = 1.0;    // time horizon

    double operator()(double t, const Vec<Dim>& x) const { return c(t, to_array<Dim>(x)); }
};

template <int Dim, class Fn>
ConformalFactor<Dim, Fn> make_factor(Fn fn, double m0, double eps, double T, double M0 = 1e3) {
    return ConformalFactor<Dim, Fn>{std::move(fn), m0, M0, eps, T};
}

struct AdmissibilityReport {
    double min_c = 0.0;
    double c1_norm = 0.0;  // sampled ||c - 1||_{C^1}
    bool ok = false;
};

/// Samples c on an (nt x n^Dim) lattice of [0,T] x box and checks m0 <= c and
/// ||c - 1||_{C^1} <= eps; the time derivative is a central difference.
template <int Dim, class Fn>
AdmissibilityReport check_admissible(const ConformalFactor<Dim, Fn>& f, const Vec<Dim>& lo,
                                     const Vec<Dim>& hi, int n = 24, int nt = 9) {
    AdmissibilityReport rep;
    rep.min_c = 1e300;
    const double ht = 1e-5 * std::max(1.0, f.T);
    std::array<int, Dim> idx{};
    const std::size_t total = static_cast<std::size_t>(std::pow(n, Dim));
    for (int it = 0; it < nt; ++it) {
        double t = f.T * it / std::max(1, nt - 1);
        for (std::size_t k = 0; k < total; ++k) {
            std::size_t r = k;
            Vec<Dim> x;
            for (int d = 0; d < Dim; ++d) {
                idx[d] = static_cast<int>(r % static_cast<std::size_t>(n));
                r /= static_cast<std::size_t>(n);
                x[d] = lo[d] + (hi[d] - lo[d]) * idx[d] / std::max(1, n - 1);
            }
            auto [v, g] = value_and_gradient<Dim>(f.c, t, x);
            double dt = (f(t + ht, x) - f(t - ht, x)) / (2 * ht);
            rep.min_c = std::min(rep.min_c, v);
            rep.c1_norm = std::max({rep.c1_norm, std::abs(v - 1.0), g.cwiseAbs().maxCoeff(), std::abs(dt)});
        }
    }
    rep.ok = rep.min_c >= f.m0 && rep.c1_norm <= f.eps;
    return rep;
}

}  // namespace tdxray
