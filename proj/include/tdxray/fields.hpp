#pragma once

#include "tdxray/core.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace tdxray {

/// A scalar field f(t, x) with a declared support box in [t_lo, t_hi] x [x_lo, x_hi].
/// support_radius > 0 additionally declares supp f(t, .) inside the ball
/// |x - support_center| <= support_radius.
template <int Dim>
struct SpaceTimeField {
    std::function<double(double, const Vec<Dim>&)> evaluator;
    double t_lo = 0.0;
    double t_hi = 0.0;
    Vec<Dim> x_lo = Vec<Dim>::Zero();
    Vec<Dim> x_hi = Vec<Dim>::Zero();
    Vec<Dim> support_center = Vec<Dim>::Zero();
    double support_radius = 0.0;
    double max_abs = 0.0;  // sup |f| (declared or sampled)

    double operator()(double t, const Vec<Dim>& x) const { return evaluator(t, x); }

    bool in_support_box(double t, const Vec<Dim>& x) const {
        if (t < t_lo || t > t_hi) return false;
        for (int i = 0; i < Dim; ++i)
            if (x[i] < x_lo[i] || x[i] > x_hi[i]) return false;
        return true;
    }
};

template <int Dim>
SpaceTimeField<Dim> zero_field(double t_hi, double half_width) {
    SpaceTimeField<Dim> f;
    f.evaluator = [](double, const Vec<Dim>&) { return 0.0; };
    f.t_hi = t_hi;
    f.x_lo = Vec<Dim>::Constant(-half_width);
    f.x_hi = Vec<Dim>::Constant(half_width);
    f.support_radius = half_width * std::sqrt(double(Dim));
    return f;
}

template <int Dim>
SpaceTimeField<Dim> constant_field(double value, double t_hi, double half_width) {
    SpaceTimeField<Dim> f = zero_field<Dim>(t_hi, half_width);
    f.evaluator = [value](double, const Vec<Dim>&) { return value; };
    f.max_abs = std::abs(value);
    return f;
}

/// C-infinity step: 1 for z <= 0, 0 for z >= 1.
inline double smooth_step_down(double z) {
    if (z <= 0.0) return 1.0;
    if (z >= 1.0) return 0.0;
    double a = std::exp(-1.0 / (1.0 - z));
    double b = std::exp(-1.0 / z);
    return a / (a + b);
}

template <int Dim>
struct GaussianBumpParams {
    double amplitude = 1.0;
    double t0 = 12.8;
    double sigma_t = 1.5;
    Vec<Dim> center = Vec<Dim>::Zero();
    double sigma_x = 0.5;
    // The Gaussian is multiplied by a smooth cutoff that switches off between
    // cut_start and cut_end standard deviations (values there are below 1e-10).
    double cut_start = 7.0;
    double cut_end = 7.6;
};

/// Smooth, compactly supported space-time bump: a separable Gaussian times a
/// C-infinity cutoff in |t - t0| and |x - center|.
template <int Dim>
SpaceTimeField<Dim> gaussian_bump(const GaussianBumpParams<Dim>& p) {
    SpaceTimeField<Dim> f;
    f.evaluator = [p](double t, const Vec<Dim>& x) {
        double zt = std::abs(t - p.t0) / p.sigma_t;
        if (zt >= p.cut_end) return 0.0;
        double zx = (x - p.center).norm() / p.sigma_x;
        if (zx >= p.cut_end) return 0.0;
        double w = p.cut_end - p.cut_start;
        double cut = smooth_step_down((zt - p.cut_start) / w) * smooth_step_down((zx - p.cut_start) / w);
        return p.amplitude * std::exp(-0.5 * (zt * zt + zx * zx)) * cut;
    };
    double rt = p.cut_end * p.sigma_t;
    double rx = p.cut_end * p.sigma_x;
    f.t_lo = p.t0 - rt;
    f.t_hi = p.t0 + rt;
    f.x_lo = p.center - Vec<Dim>::Constant(rx);
    f.x_hi = p.center + Vec<Dim>::Constant(rx);
    f.support_center = p.center;
    f.support_radius = rx;
    f.max_abs = std::abs(p.amplitude);
    return f;
}

/// Default 2-D test bump used by the harness and acceptance suite.
inline GaussianBumpParams<2> default_bump_params() {
    GaussianBumpParams<2> p;
    p.center << 0.1, -0.1;
    return p;
}

/// Uniform sampling grid on [t0, t0 + nt*dt) x prod [x_lo_i, x_lo_i + nx*dx).
template <int Dim>
struct SpaceTimeGrid {
    double t0 = 0.0;
    double dt = 0.4;
    int nt = 64;
    Vec<Dim> x_lo = Vec<Dim>::Constant(-8.0);
    double dx = 0.25;
    int nx = 64;

    double t(int j) const { return t0 + j * dt; }
    double x(int axis, int k) const { return x_lo[axis] + k * dx; }
    std::size_t spatial_size() const { return static_cast<std::size_t>(std::pow(nx, Dim)); }
    std::size_t size() const { return static_cast<std::size_t>(nt) * spatial_size(); }
    double cell_volume() const { return dt * std::pow(dx, Dim); }

    /// Spatial point of flat spatial index k (axis 0 fastest).
    Vec<Dim> point(std::size_t k) const {
        Vec<Dim> x;
        for (int a = 0; a < Dim; ++a) {
            x[a] = x_lo[a] + static_cast<double>(k % static_cast<std::size_t>(nx)) * dx;
            k /= static_cast<std::size_t>(nx);
        }
        return x;
    }

    /// Grid with the spacings halved over the same box.
    SpaceTimeGrid refined() const {
        SpaceTimeGrid g = *this;
        g.dt *= 0.5;
        g.nt *= 2;
        g.dx *= 0.5;
        g.nx *= 2;
        return g;
    }
};

/// Default grid for the 2-D bump: 64^3 over [0, 25.6] x [-8, 8]^2.
inline SpaceTimeGrid<2> default_grid() { return {}; }

/// Samples f on the grid, time-major (index = j * spatial_size + k).
template <int Dim>
std::vector<double> sample(const SpaceTimeField<Dim>& f, const SpaceTimeGrid<Dim>& g) {
    std::vector<double> out(g.size());
    const std::size_t ns = g.spatial_size();
    std::vector<Vec<Dim>> pts(ns);
    for (std::size_t k = 0; k < ns; ++k) pts[k] = g.point(k);
    parallel_for(static_cast<std::size_t>(g.nt), [&](std::size_t j) {
        double t = g.t(static_cast<int>(j));
        for (std::size_t k = 0; k < ns; ++k) out[j * ns + k] = f(t, pts[k]);
    });
    return out;
}

}  // namespace tdxray
