#pragma once

// Gaussian beams for the wave operator of the metric c * I:
//     Box u = c^{-n/2} [ d_t(c^{n/2} d_t u) - div(c^{n/2-1} grad u) ],
// U = (lambda/pi)^{n/4} exp(i lambda psi) a, with psi_t = h(t, x, grad psi),
// h = |p| / sqrt(c). Phase and amplitude are carried as Taylor jets in
// y = x - xtilde(t): the phase to third order and the amplitude to first.

#include "tdxray/conformal.hpp"
#include "tdxray/core.hpp"
#include "tdxray/fields.hpp"
#include "tdxray/geometry.hpp"
#include "tdxray/jet.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace tdxray {

struct BeamParams {
    double lambda = 64.0;
    double eps1 = 1e-2;
    double alpha = 2.0;
    double sigma = 0.1;
    double dt = 2e-3;       // integrator step
    double duration = 1.0;  // beam lives on [t0, t0 + duration]

    void validate() const {
        if (!(lambda > 1.0)) throw Error(ErrorKind::InvalidArgument, "beams/params", "lambda must exceed 1");
        if (!(eps1 > 0.0 && eps1 < 1.0)) throw Error(ErrorKind::InvalidArgument, "beams/params", "eps1 outside (0,1)");
        if (!(alpha > 1.0)) throw Error(ErrorKind::InvalidArgument, "beams/params", "alpha must exceed 1");
        if (!(sigma > 0.0 && sigma < 0.5)) throw Error(ErrorKind::InvalidArgument, "beams/params", "sigma outside (0,1/2)");
        if (!(dt > 0.0 && duration > 0.0)) throw Error(ErrorKind::InvalidArgument, "beams/params", "dt, duration must be positive");
    }
};

template <int Dim>
using PhaseJet = Jet<Complex, Dim, 3>;

template <int Dim>
struct BeamState {
    Vec<Dim> x = Vec<Dim>::Zero();
    PhaseJet<Dim> D;  // psi(t, xtilde + y)
    CMat<Dim> Y = CMat<Dim>::Identity();
    Complex A0 = 1.0;
    CVec<Dim> A1 = CVec<Dim>::Zero();
};

namespace beam_detail {

template <int Dim>
typename PhaseJet<Dim>::Index unit(int i, int times = 1) {
    typename PhaseJet<Dim>::Index a{};
    a[static_cast<std::size_t>(i)] = times;
    return a;
}

template <int Dim>
typename PhaseJet<Dim>::Index pair(int i, int j) {
    typename PhaseJet<Dim>::Index a{};
    a[static_cast<std::size_t>(i)] += 1;
    a[static_cast<std::size_t>(j)] += 1;
    return a;
}

template <int Dim>
Vec<Dim> gradient(const PhaseJet<Dim>& D) {
    Vec<Dim> g;
    for (int i = 0; i < Dim; ++i) g[i] = D.coeff(unit<Dim>(i)).real();
    return g;
}

template <int Dim>
CMat<Dim> hessian(const PhaseJet<Dim>& D) {
    CMat<Dim> M;
    for (int i = 0; i < Dim; ++i)
        for (int j = 0; j < Dim; ++j) M(i, j) = (i == j ? 2.0 : 1.0) * D.coeff(pair<Dim>(i, j));
    return M;
}

/// y-jets of c and c_t at (t, x + y), from one jet in (t, y).
template <int Dim, class Fn>
std::pair<PhaseJet<Dim>, PhaseJet<Dim>> factor_jets(const Fn& c, double t, const Vec<Dim>& x) {
    using FJ = Jet<double, Dim + 1, 3>;
    FJ tj = FJ::variable(0, t);
    std::array<FJ, Dim> xj;
    for (int i = 0; i < Dim; ++i) xj[static_cast<std::size_t>(i)] = FJ::variable(i + 1, x[i]);
    FJ cf = c(tj, xj);
    PhaseJet<Dim> cj, ctj;
    for (std::size_t k = 0; k < PhaseJet<Dim>::size; ++k) {
        const auto& a = PhaseJet<Dim>::multi_index(k);
        typename FJ::Index b{};
        for (int i = 0; i < Dim; ++i) b[static_cast<std::size_t>(i) + 1] = a[static_cast<std::size_t>(i)];
        cj[k] = cf.coeff(b);
        b[0] = 1;
        ctj[k] = cf.coeff(b);
    }
    return {cj, ctj};
}

template <int Dim, class Fn>
BeamState<Dim> rhs(const Fn& c, double t, const BeamState<Dim>& s) {
    using PJ = PhaseJet<Dim>;
    auto [cJ, ctJ] = factor_jets<Dim>(c, t, s.x);
    const double n = Dim;
    std::array<PJ, Dim> P;
    PJ p2(Complex(0.0));
    for (int i = 0; i < Dim; ++i) {
        P[static_cast<std::size_t>(i)] = s.D.derivative(i);
        p2 += P[static_cast<std::size_t>(i)] * P[static_cast<std::size_t>(i)];
    }
    const PJ pn = sqrt(p2);
    const PJ isc = pow(cJ, -0.5);
    const PJ h = pn * isc;

    const Vec<Dim> p = gradient<Dim>(s.D);
    const double pnorm = p.norm();
    const double c0 = cJ.value().real();
    const Vec<Dim> phat = p / pnorm;
    const Vec<Dim> xdot = -phat / std::sqrt(c0);

    BeamState<Dim> out;
    out.x = xdot;
    // d/dt psi(t, xtilde + y) = h(t, xtilde + y, grad psi) + xdot . grad psi
    PJ dD = h;
    for (int i = 0; i < Dim; ++i) dD += P[static_cast<std::size_t>(i)] * Complex(xdot[i]);
    out.D = dD;

    // variational system: Ydot = -h_px Y - h_pp M Y
    Vec<Dim> g;  // grad c^{-1/2}
    for (int i = 0; i < Dim; ++i) g[i] = isc.coeff(unit<Dim>(i)).real();
    Mat<Dim> Hpp = (Mat<Dim>::Identity() - phat * phat.transpose()) / (pnorm * std::sqrt(c0));
    Mat<Dim> Hpx = phat * g.transpose();
    CMat<Dim> M = hessian<Dim>(s.D);
    out.Y = -Hpx.template cast<Complex>() * s.Y - Hpp.template cast<Complex>() * M * s.Y;

    // transport: W a_t - V . grad a + G a = 0
    const PJ w = pow(cJ, n / 2);
    const PJ ac = pow(cJ, n / 2 - 1);
    const PJ wt = ctJ * pow(cJ, n / 2 - 1) * Complex(n / 2);
    const PJ ht = pn * pow(cJ, -1.5) * ctJ * Complex(-0.5);
    PJ psitt = ht;
    for (int i = 0; i < Dim; ++i) psitt += P[static_cast<std::size_t>(i)] / pn * isc * h.derivative(i);
    const PJ W = w * h * Complex(2.0);
    PJ G = wt * h + w * psitt;
    std::array<PJ, Dim> V;
    for (int i = 0; i < Dim; ++i) {
        PJ flux = ac * P[static_cast<std::size_t>(i)];
        V[static_cast<std::size_t>(i)] = flux * Complex(2.0);
        G -= flux.derivative(i);
    }
    const Complex W0 = W.value(), G0 = G.value();
    out.A0 = -s.A0 * G0 / W0;
    Complex xa = 0.0;
    for (int i = 0; i < Dim; ++i) xa += xdot[i] * s.A1[i];
    for (int j = 0; j < Dim; ++j) {
        Complex vs = 0.0;
        for (int i = 0; i < Dim; ++i) vs += V[static_cast<std::size_t>(i)].coeff(unit<Dim>(j)) * s.A1[i];
        out.A1[j] = -(W.coeff(unit<Dim>(j)) * (out.A0 - xa) - vs + s.A0 * G.coeff(unit<Dim>(j)) + s.A1[j] * G0) / W0;
    }
    return out;
}

template <int Dim>
BeamState<Dim> axpy(const BeamState<Dim>& a, const BeamState<Dim>& k, double f) {
    BeamState<Dim> r;
    r.x = a.x + f * k.x;
    r.D = a.D + k.D * Complex(f);
    r.Y = a.Y + Complex(f) * k.Y;
    r.A0 = a.A0 + f * k.A0;
    r.A1 = a.A1 + Complex(f) * k.A1;
    return r;
}

template <int Dim, class Fn>
BeamState<Dim> rk4(const Fn& c, double t, const BeamState<Dim>& s, double h) {
    BeamState<Dim> k1 = rhs<Dim>(c, t, s);
    BeamState<Dim> k2 = rhs<Dim>(c, t + 0.5 * h, axpy(s, k1, 0.5 * h));
    BeamState<Dim> k3 = rhs<Dim>(c, t + 0.5 * h, axpy(s, k2, 0.5 * h));
    BeamState<Dim> k4 = rhs<Dim>(c, t + h, axpy(s, k3, h));
    BeamState<Dim> r = axpy(s, k1, h / 6.0);
    r = axpy(r, k2, h / 3.0);
    r = axpy(r, k3, h / 3.0);
    return axpy(r, k4, h / 6.0);
}

}  // namespace beam_detail

template <int Dim, class Fn>
struct BeamCurve {
    ConformalFactor<Dim, Fn> factor;
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<BeamState<Dim>> states;
    std::vector<Vec<Dim>> velocities;
    Complex psi0 = 0.0;
    double psi_t0 = 1.0;  // psi_t at (t0, x0)

    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }

    std::size_t node(double t) const {
        double k = std::floor((t - t0) / dt);
        if (k < 0.0) return 0;
        return std::min(static_cast<std::size_t>(k), times.size() - 2);
    }

    /// State at time t: one RK4 step from the preceding node (smooth in t within a step).
    BeamState<Dim> state_at(double t) const {
        std::size_t k = node(t);
        double h = t - times[k];
        if (h == 0.0) return states[k];
        return beam_detail::rk4<Dim>(factor.c, times[k], states[k], h);
    }

    /// Cubic Hermite interpolation of the center curve (no ODE solve).
    Vec<Dim> center(double t) const {
        std::size_t k = node(t);
        double h = times[k + 1] - times[k], s = (t - times[k]) / h;
        double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        return h00 * states[k].x + h10 * h * velocities[k] + h01 * states[k + 1].x + h11 * h * velocities[k + 1];
    }

    Vec<Dim> momentum(std::size_t k) const { return beam_detail::gradient<Dim>(states[k].D); }
    CMat<Dim> hessian(std::size_t k) const { return beam_detail::hessian<Dim>(states[k].D); }

    double min_eig_im(std::size_t k) const {
        Mat<Dim> im = hessian(k).imag();
        im = 0.5 * (im + im.transpose());
        return Eigen::SelfAdjointEigenSolver<Mat<Dim>>(im).eigenvalues().minCoeff();
    }

    double hamiltonian(std::size_t k) const {
        double c = factor(times[k], states[k].x);
        return momentum(k).norm() / std::sqrt(c);
    }
};

/// Integrates center, phase jet, variational matrices and amplitude from the
/// boundary ray with a0 = 1, grad psi = -omega0, Im M = I, Re M = 0 at (t0, x0).
template <int Dim, class Fn>
BeamCurve<Dim, Fn> build_beam(const ConformalFactor<Dim, Fn>& cf, const BoundaryRay<Dim>& ray, double t0,
                              const BeamParams& params) {
    params.validate();
    if (t0 < 0.0) throw Error(ErrorKind::InvalidArgument, "beams/build_beam", "t0 < 0");
    {
        double reach = params.duration / std::sqrt(cf.m0);
        Vec<Dim> lo = ray.x - Vec<Dim>::Constant(reach), hi = ray.x + Vec<Dim>::Constant(reach);
        auto rep = check_admissible(cf, lo, hi, 12, 5);
        if (!rep.ok)
            throw Error(ErrorKind::Inadmissible, "beams/build_beam",
                        "min c = " + std::to_string(rep.min_c) + ", C1 defect = " + std::to_string(rep.c1_norm));
    }
    BeamCurve<Dim, Fn> b;
    b.factor = cf;
    b.t0 = t0;
    const int steps = std::max(2, static_cast<int>(std::ceil(params.duration / params.dt)));
    b.dt = params.duration / steps;

    BeamState<Dim> s;
    s.x = ray.x;
    for (int i = 0; i < Dim; ++i) {
        s.D.set_coeff(beam_detail::unit<Dim>(i), Complex(-ray.omega[i]));
        s.D.set_coeff(beam_detail::unit<Dim>(i, 2), Complex(0.0, 0.5));
    }
    b.psi0 = s.D.value();
    b.psi_t0 = ray.omega.norm() / std::sqrt(cf(t0, ray.x));
    for (int k = 0; k <= steps; ++k) {
        double t = t0 + k * b.dt;
        const double c = cf(t, s.x);
        if (c < cf.m0)
            throw Error(ErrorKind::Inadmissible, "beams/build_beam", "c below m0 on the ray at t = " + std::to_string(t));
        b.times.push_back(t);
        b.states.push_back(s);
        b.velocities.push_back(beam_detail::rhs<Dim>(cf.c, t, s).x);
        if (std::abs(s.Y.determinant()) < 1e-12)
            throw Error(ErrorKind::CausticDetected, "beams/build_beam", "det Y vanished at t = " + std::to_string(t));
        if (b.min_eig_im(b.states.size() - 1) <= 0.0)
            throw Error(ErrorKind::CausticDetected, "beams/build_beam", "Im M lost definiteness at t = " + std::to_string(t));
        if (k < steps) s = beam_detail::rk4<Dim>(cf.c, t, s, b.dt);
    }
    return b;
}

/// (lambda/pi)^{n/4} exp(i lambda psi) a0(t) with the quadratic phase
/// psi0 + grad psi . y + (1/2) y^T M y, y = x - xtilde(t).
template <int Dim, class Fn>
Complex beam_evaluate(const BeamCurve<Dim, Fn>& b, const BeamParams& params, double t, const Vec<Dim>& x) {
    BeamState<Dim> s = b.state_at(t);
    const Vec<Dim> y = x - s.x;
    const CVec<Dim> yc = y.template cast<Complex>();
    Complex psi = s.D.value();
    for (int i = 0; i < Dim; ++i) psi += s.D.coeff(beam_detail::unit<Dim>(i)) * y[i];
    psi += 0.5 * (yc.transpose() * beam_detail::hessian<Dim>(s.D) * yc)(0, 0);
    const double norm = std::pow(params.lambda / kPi, Dim / 4.0);
    return norm * std::exp(Complex(0.0, params.lambda) * psi) * s.A0;
}

namespace beam_detail {

template <int Dim>
Complex corrected_value(const BeamState<Dim>& s, double lambda, const Vec<Dim>& x) {
    const Vec<Dim> y = x - s.x;
    std::array<Complex, Dim> ya;
    Complex a = s.A0;
    for (int i = 0; i < Dim; ++i) {
        ya[static_cast<std::size_t>(i)] = y[i];
        a += s.A1[i] * y[i];
    }
    const Complex psi = s.D.evaluate(ya);
    return std::pow(lambda / kPi, Dim / 4.0) * std::exp(Complex(0.0, lambda) * psi) * a;
}

template <int Dim>
Complex quadratic_value(const BeamState<Dim>& s, double lambda, const Vec<Dim>& x) {
    const Vec<Dim> y = x - s.x;
    const CVec<Dim> yc = y.template cast<Complex>();
    Complex psi = s.D.value();
    for (int i = 0; i < Dim; ++i) psi += s.D.coeff(unit<Dim>(i)) * y[i];
    psi += 0.5 * (yc.transpose() * hessian<Dim>(s.D) * yc)(0, 0);
    return std::pow(lambda / kPi, Dim / 4.0) * std::exp(Complex(0.0, lambda) * psi) * s.A0;
}

}  // namespace beam_detail

/// Same as beam_evaluate with the cubic phase terms and the linear amplitude correction.
template <int Dim, class Fn>
Complex beam_evaluate_corrected(const BeamCurve<Dim, Fn>& b, const BeamParams& params, double t, const Vec<Dim>& x) {
    return beam_detail::corrected_value<Dim>(b.state_at(t), params.lambda, x);
}

/// Box u at (t, x) from fourth-order central differences with step h; u is any
/// callable (t, x) -> complex. Coefficients of the operator are evaluated exactly.
template <int Dim, class Fn, class U>
Complex box_fd(const Fn& c, const U& u, double t, const Vec<Dim>& x, double h) {
    using J = Jet<double, Dim + 1, 1>;
    std::array<J, Dim> xj;
    for (int i = 0; i < Dim; ++i) xj[static_cast<std::size_t>(i)] = J::variable(i + 1, x[i]);
    J cj = c(J::variable(0, t), xj);
    const double n = Dim, cv = cj.value(), ct = cj[0 + 1];
    const double w = std::pow(cv, n / 2), wt = 0.5 * n * std::pow(cv, n / 2 - 1) * ct;
    const double ac = std::pow(cv, n / 2 - 1);
    auto d1 = [h](Complex m2, Complex m1, Complex p1, Complex p2) { return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h); };
    auto d2 = [h](Complex m2, Complex m1, Complex z, Complex p1, Complex p2) {
        return (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
    };
    const Complex u0 = u(t, x);
    Complex tm2 = u(t - 2 * h, x), tm1 = u(t - h, x), tp1 = u(t + h, x), tp2 = u(t + 2 * h, x);
    Complex acc = w * d2(tm2, tm1, u0, tp1, tp2) + wt * d1(tm2, tm1, tp1, tp2);
    for (int i = 0; i < Dim; ++i) {
        Vec<Dim> e = Vec<Dim>::Zero();
        e[i] = h;
        Complex m2 = u(t, x - 2 * e), m1 = u(t, x - e), p1 = u(t, x + e), p2 = u(t, x + 2 * e);
        double aci = (n / 2 - 1) * std::pow(cv, n / 2 - 2) * cj[1 + static_cast<std::size_t>(i) + 1];
        acc -= ac * d2(m2, m1, u0, p1, p2) + aci * d1(m2, m1, p1, p2);
    }
    return acc / w;
}

struct ResidualReport {
    std::vector<double> lambdas;
    std::vector<double> sup_corrected;
    std::vector<double> sup_quadratic;
    double slope = 0.0;            // of log sup |Box U| (corrected beam) vs log lambda
    double slope_quadratic = 0.0;  // same for the strictly quadratic beam
    double max_halving_change = 0.0;
};

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

namespace beam_detail {

/// sup |Box U| over the probe set for one lambda and FD step h.
template <int Dim, class Fn>
double residual_sup(const BeamCurve<Dim, Fn>& b, double lambda, double h, bool corrected, int n_times, int per_axis) {
    double sup = 0.0;
    for (int it = 0; it < n_times; ++it) {
        // probe times sit at step midpoints, away from both ends
        const std::size_t nodes = b.times.size() - 1;
        std::size_t k = 1 + (nodes - 2) * static_cast<std::size_t>(it + 1) / static_cast<std::size_t>(n_times + 1);
        const double t = b.times[k] + 0.5 * b.dt;
        std::array<double, 5> ts;
        std::array<BeamState<Dim>, 5> ss;
        for (int j = 0; j < 5; ++j) {
            ts[static_cast<std::size_t>(j)] = t + (j - 2) * h;
            ss[static_cast<std::size_t>(j)] = b.state_at(ts[static_cast<std::size_t>(j)]);
        }
        auto u = [&](double tt, const Vec<Dim>& x) {
            for (int j = 0; j < 5; ++j)
                if (tt == ts[static_cast<std::size_t>(j)])
                    return corrected ? corrected_value<Dim>(ss[static_cast<std::size_t>(j)], lambda, x)
                                     : quadratic_value<Dim>(ss[static_cast<std::size_t>(j)], lambda, x);
            throw Error(ErrorKind::InvalidArgument, "beams/residual", "stencil time not cached");
        };
        const BeamState<Dim>& s = ss[2];
        Mat<Dim> im = hessian<Dim>(s.D).imag();
        double mu = Eigen::SelfAdjointEigenSolver<Mat<Dim>>(0.5 * (im + im.transpose())).eigenvalues().minCoeff();
        const double r = 5.0 / std::sqrt(lambda * mu);
        const std::size_t total = static_cast<std::size_t>(std::pow(per_axis, Dim));
        for (std::size_t q = 0; q < total; ++q) {
            std::size_t rem = q;
            Vec<Dim> x = s.x;
            for (int a = 0; a < Dim; ++a) {
                x[a] += -r + 2.0 * r * static_cast<double>(rem % static_cast<std::size_t>(per_axis)) / (per_axis - 1);
                rem /= static_cast<std::size_t>(per_axis);
            }
            sup = std::max(sup, std::abs(box_fd<Dim>(b.factor.c, u, t, x, h)));
        }
    }
    return sup;
}

}  // namespace beam_detail

/// Fits log sup |Box U_lambda| against log lambda. The FD step is
/// lambda^{-3/2}/4; StencilUnderResolved if halving it moves a sup by more than 5%.
template <int Dim, class Fn>
ResidualReport residual_scaling(const BeamCurve<Dim, Fn>& b, const std::vector<double>& lambdas, int n_times = 5,
                                int per_axis = Dim == 2 ? 13 : 9) {
    if (lambdas.size() < 4) throw Error(ErrorKind::InvalidArgument, "beams/residual_scaling", "need at least 4 lambdas");
    if (b.times.size() < 8) throw Error(ErrorKind::InvalidArgument, "beams/residual_scaling", "beam too short");
    ResidualReport rep;
    rep.lambdas = lambdas;
    rep.sup_corrected.resize(lambdas.size());
    rep.sup_quadratic.resize(lambdas.size());
    std::vector<double> change(lambdas.size());
    parallel_for(lambdas.size(), [&](std::size_t i) {
        const double lam = lambdas[i];
        const double h = 0.25 * std::pow(lam, -1.5);
        double s1 = beam_detail::residual_sup(b, lam, h, true, n_times, per_axis);
        double s2 = beam_detail::residual_sup(b, lam, 0.5 * h, true, n_times, per_axis);
        change[i] = std::abs(s1 - s2) / s2;
        if (change[i] > 0.05)
            throw Error(ErrorKind::StencilUnderResolved, "beams/residual_scaling",
                        "halving h changed sup by " + std::to_string(100 * change[i]) + "% at lambda " + std::to_string(lam));
        rep.sup_corrected[i] = s1;
        rep.sup_quadratic[i] = beam_detail::residual_sup(b, lam, h, false, n_times, per_axis);
    });
    for (double c : change) rep.max_halving_change = std::max(rep.max_halving_change, c);
    rep.slope = fit_slope(rep.lambdas, rep.sup_corrected);
    rep.slope_quadratic = fit_slope(rep.lambdas, rep.sup_quadratic);
    return rep;
}

/// chi = 1 on the tube {D < r1}, 0 where D > r2, smooth monotone in between, with
/// D(s, y) = min_r |s - r| + |y - xtilde(r)|, r1 = eps1^{1/(2 n alpha)}, r2 = 2^{1/n} r1.
template <int Dim, class Fn>
struct BeamCutoff {
    const BeamCurve<Dim, Fn>* beam = nullptr;
    double r1 = 0.0;
    double r2 = 0.0;

    double tube_distance(double s, const Vec<Dim>& y) const {
        const auto& b = *beam;
        auto F = [&](double r) { return std::abs(s - r) + (y - b.center(r)).norm(); };
        std::size_t best = 0;
        double fb = 1e300;
        for (std::size_t k = 0; k < b.times.size(); ++k) {
            double v = std::abs(s - b.times[k]) + (y - b.states[k].x).norm();
            if (v < fb) {
                fb = v;
                best = k;
            }
        }
        double lo = b.times[best == 0 ? 0 : best - 1];
        double hi = b.times[std::min(best + 1, b.times.size() - 1)];
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = hi - g * (hi - lo), c = lo + g * (hi - lo);
        double fa = F(a), fc = F(c);
        for (int i = 0; i < 80 && hi - lo > 1e-14; ++i) {
            if (fa < fc) {
                hi = c;
                c = a;
                fc = fa;
                a = hi - g * (hi - lo);
                fa = F(a);
            } else {
                lo = a;
                a = c;
                fa = fc;
                c = lo + g * (hi - lo);
                fc = F(c);
            }
        }
        return std::min({fb, fa, fc, F(s >= b.t_begin() && s <= b.t_end() ? s : b.t_begin())});
    }

    double operator()(double s, const Vec<Dim>& y) const {
        return smooth_step_down((tube_distance(s, y) - r1) / (r2 - r1));
    }
};

template <int Dim, class Fn>
BeamCutoff<Dim, Fn> cutoff_build(const BeamParams& params, const BeamCurve<Dim, Fn>& beam) {
    if (!(params.eps1 > 0.0 && params.eps1 < 1.0) || !(params.alpha > 1.0))
        throw Error(ErrorKind::InvalidArgument, "beams/cutoff_build", "needs eps1 in (0,1), alpha > 1");
    BeamCutoff<Dim, Fn> c;
    c.beam = &beam;
    c.r1 = std::pow(params.eps1, 1.0 / (2.0 * Dim * params.alpha));
    c.r2 = std::pow(2.0, 1.0 / Dim) * c.r1;
    return c;
}

/// Sup of the first and second finite-difference derivatives of chi over
/// points in the transition shell around the curve at time s.
template <int Dim, class Fn>
std::pair<double, double> cutoff_derivative_sups(const BeamCutoff<Dim, Fn>& chi, double s, int samples = 64) {
    const Vec<Dim> xc = chi.beam->center(s);
    const double h = 1e-3 * chi.r1;
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < samples; ++k) {
        double rho = chi.r1 + (chi.r2 - chi.r1) * (k + 0.5) / samples;
        Vec<Dim> u = Vec<Dim>::Zero();
        double ang = 2.0 * kPi * k / samples;
        u[0] = std::cos(ang);
        u[1] = std::sin(ang);
        Vec<Dim> y = xc + rho * u;
        for (int a = 0; a < Dim; ++a) {
            Vec<Dim> e = Vec<Dim>::Zero();
            e[a] = h;
            double fm = chi(s, y - e), f0 = chi(s, y), fp = chi(s, y + e);
            s1 = std::max(s1, std::abs(fp - fm) / (2 * h));
            s2 = std::max(s2, std::abs(fp - 2 * f0 + fm) / (h * h));
        }
    }
    return {s1, s2};
}

struct ConcentrationRow {
    double lambda = 0.0;
    Complex value = 0.0;
    double target = 0.0;  // h(t, xtilde(t))
    double error = 0.0;
    double erfc_minus = 0.0;  // erfc(-lambda^{2 sigma})
    double erfc_plus = 0.0;   // erfc(+lambda^{2 sigma})
};

/// (lambda/pi)^{n/2} (det B)^{1/2} int exp(-lambda <B y, y>) h(t, xtilde + y) chi dy
/// per lambda, by tensor trapezoid over |y_i| <= 9/sqrt(lambda mu), mu = min eig Re B,
/// doubling the resolution until two levels agree to 1e-11 relative.
template <int Dim, class Fn, class H>
std::vector<ConcentrationRow> gaussian_concentration(const H& hfield, const BeamCurve<Dim, Fn>& beam, const CMat<Dim>& B,
                                                     const BeamParams& params, double t,
                                                     const std::vector<double>& lambdas, bool use_cutoff = true) {
    Mat<Dim> reB = B.real();
    reB = 0.5 * (reB + reB.transpose());
    const double mu = Eigen::SelfAdjointEigenSolver<Mat<Dim>>(reB).eigenvalues().minCoeff();
    if (!(mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "beams/gaussian_concentration", "Re B must be positive definite");
    if (std::abs(B.determinant()) == 0.0) throw Error(ErrorKind::InvalidArgument, "beams/gaussian_concentration", "B singular");
    const Vec<Dim> xc = beam.center(t);
    std::optional<BeamCutoff<Dim, Fn>> chi;
    if (use_cutoff) chi = cutoff_build(params, beam);
    const Complex sdet = std::sqrt(B.determinant());
    std::vector<ConcentrationRow> rows(lambdas.size());
    parallel_for(lambdas.size(), [&](std::size_t li) {
        const double lam = lambdas[li];
        const double L = 9.0 / std::sqrt(lam * mu);
        auto integrate = [&](int m) {
            const double dy = 2.0 * L / m;
            const std::size_t total = static_cast<std::size_t>(std::pow(m + 1, Dim));
            Complex acc = 0.0;
            for (std::size_t q = 0; q < total; ++q) {
                std::size_t rem = q;
                Vec<Dim> y;
                double w = 1.0;
                for (int a = 0; a < Dim; ++a) {
                    int i = static_cast<int>(rem % static_cast<std::size_t>(m + 1));
                    rem /= static_cast<std::size_t>(m + 1);
                    y[a] = -L + i * dy;
                    if (i == 0 || i == m) w *= 0.5;
                }
                const CVec<Dim> yc = y.template cast<Complex>();
                Complex quad = (yc.transpose() * B * yc)(0, 0);
                Vec<Dim> x = xc + y;
                double cut = chi ? (*chi)(t, x) : 1.0;
                acc += w * std::exp(-lam * quad) * hfield(t, x) * cut;
            }
            return acc * std::pow(dy, Dim);
        };
        const int m_max = Dim == 2 ? 1024 : 128;
        int m = 16;
        Complex prev = integrate(m), cur = prev;
        while (true) {
            m *= 2;
            cur = integrate(m);
            if (std::abs(cur - prev) <= 1e-11 * std::max(1.0, std::abs(cur))) break;
            if (m >= m_max)
                throw Error(ErrorKind::QuadratureNotConverged, "beams/gaussian_concentration",
                            "lambda " + std::to_string(lam));
            prev = cur;
        }
        ConcentrationRow r;
        r.lambda = lam;
        r.value = std::pow(lam / kPi, Dim / 2.0) * sdet * cur;
        r.target = hfield(t, xc);
        r.error = std::abs(r.value - r.target);
        r.erfc_minus = std::erfc(-std::pow(lam, 2 * params.sigma));
        r.erfc_plus = std::erfc(std::pow(lam, 2 * params.sigma));
        rows[li] = r;
    });
    return rows;
}

}  // namespace tdxray
