#pragma once

// Time-dependent X-ray transform: I f(x, omega) = int_0^tau f(s, gamma(s)) ds,
// where time advances with arc length along the ray.

#include "tdxray/core.hpp"
#include "tdxray/fields.hpp"
#include "tdxray/geometry.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace tdxray {

inline constexpr double kQuadTol = 1e-9;

/// Composite Simpson on [0, path.exit_time], doubling the panel count until two
/// successive levels agree to kQuadTol.
template <int Dim>
double xray_single(const SpaceTimeField<Dim>& f, const GeodesicPath<Dim>& path, double quad_tol = kQuadTol) {
    const double tau = path.exit_time;
    const double t0 = path.t_start;
    auto g = [&](double s) { return f(t0 + s, path.position(s)); };

    int n = 16;
    double ends = g(0.0) + g(tau);
    double even = 0.0;  // interior nodes at even positions
    double odd = 0.0;
    {
        double h = tau / n;
        for (int i = 1; i < n; ++i) (i % 2 ? odd : even) += g(i * h);
    }
    double prev = (ends + 4.0 * odd + 2.0 * even) * (tau / n) / 3.0;
    constexpr int kMaxPanels = 1 << 21;
    while (true) {
        // refine: old nodes all become even nodes; new odd nodes at midpoints
        even += odd;
        odd = 0.0;
        n *= 2;
        double h = tau / n;
        for (int i = 1; i < n; i += 2) odd += g(i * h);
        double cur = (ends + 4.0 * odd + 2.0 * even) * h / 3.0;
        double diff = std::abs(cur - prev);
        if (diff <= quad_tol && n >= 64) return cur;
        if (n >= kMaxPanels) {
            if (diff > 10.0 * quad_tol)
                throw Error(ErrorKind::QuadratureNotConverged, "xray/xray_single",
                            "halving changed the integral by " + std::to_string(diff));
            return cur;
        }
        prev = cur;
    }
}

template <int Dim>
struct Sinogram {
    std::vector<BoundaryRay<Dim>> rays;
    std::vector<double> taus;
    std::vector<double> values;
    double sup_norm = 0.0;
    double noise_sup = 0.0;  // sup |perturbation| after perturb_sinogram

    void recompute_sup() {
        sup_norm = 0.0;
        for (double v : values) sup_norm = std::max(sup_norm, std::abs(v));
    }
};

/// If along each ray; output order matches input order. Module errors are
/// re-raised with the failing ray index.
template <int Dim>
Sinogram<Dim> sinogram(const SpaceTimeField<Dim>& f, const std::vector<BoundaryRay<Dim>>& rays,
                       const MetricSpec<Dim>& metric, const ConvexBody<Dim>& body, double dt = 1e-2) {
    if (rays.empty()) throw Error(ErrorKind::InvalidArgument, "xray/sinogram", "no rays");
    Sinogram<Dim> s;
    s.rays = rays;
    s.taus.resize(rays.size());
    s.values.resize(rays.size());
    parallel_for(rays.size(), [&](std::size_t i) {
        try {
            GeodesicPath<Dim> path = geodesic_trace(metric, body, rays[i], dt);
            s.taus[i] = path.exit_time;
            s.values[i] = xray_single(f, path);
        } catch (const Error& e) {
            throw Error(e.kind(), "xray/sinogram", "ray " + std::to_string(i) + ": " + e.message());
        }
    });
    s.recompute_sup();
    return s;
}

/// Adds deterministic uniform noise in [-noise_level, noise_level] to each value.
template <int Dim>
Sinogram<Dim> perturb_sinogram(const Sinogram<Dim>& s, double noise_level, std::uint64_t seed) {
    if (noise_level < 0.0) throw Error(ErrorKind::InvalidArgument, "xray/perturb_sinogram", "noise_level < 0");
    Sinogram<Dim> out = s;
    out.noise_sup = 0.0;
    if (noise_level == 0.0) return out;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double e = noise_level * hashed_uniform(seed, i);
        out.values[i] += e;
        out.noise_sup = std::max(out.noise_sup, std::abs(e));
    }
    out.recompute_sup();
    return out;
}

/// Line integrals If(x, omega) = int_0^inf f(s, x + s omega) ds for a fixed
/// direction and start points x on an omega-aligned grid,
///     x = sum_i p_i E_i + h omega,
/// where E_i is an orthonormal basis of omega^perp. The grid covers every line
/// start whose line meets supp f at a time in supp f.
template <int Dim>
struct LineData {
    Vec<Dim> omega;
    std::array<Vec<Dim>, Dim - 1> frame;
    std::array<double, Dim - 1> p_lo{};
    double dp = 0.0;
    int np = 0;  // per p-axis
    double h_lo = 0.0;
    double dh = 0.0;
    int nh = 0;
    std::vector<double> values;  // index = ih * np^(Dim-1) + flat p index (axis 0 fastest)
    double noise_sup = 0.0;

    std::size_t p_count() const { return static_cast<std::size_t>(std::pow(np, Dim - 1)); }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    Vec<Dim> start_point(std::size_t flat_p, int ih) const {
        Vec<Dim> x = (h_lo + ih * dh) * omega;
        for (int a = 0; a < Dim - 1; ++a) {
            x += (p_lo[a] + static_cast<double>(flat_p % static_cast<std::size_t>(np)) * dp) * frame[a];
            flat_p /= static_cast<std::size_t>(np);
        }
        return x;
    }
};

template <int Dim>
std::array<Vec<Dim>, Dim - 1> orthonormal_complement(const Vec<Dim>& omega) {
    std::array<Vec<Dim>, Dim - 1> e;
    if constexpr (Dim == 2) {
        e[0] = Vec<Dim>(-omega[1], omega[0]);
    } else {
        e[0] = omega.unitOrthogonal();
        e[1] = omega.cross(e[0]).normalized();
    }
    return e;
}

/// Computes LineData for direction omega with start-point spacing `spacing` and
/// trapezoid quadrature in s with step `spacing`.
///
/// Throws CoverageError if the declared support of f is not inside the body,
/// i.e. the chords of the body cannot sweep it.
template <int Dim>
LineData<Dim> line_data(const SpaceTimeField<Dim>& f, const Vec<Dim>& omega, const ConvexBody<Dim>& body,
                        double spacing = 0.25) {
    if (f.support_radius <= 0.0)
        throw Error(ErrorKind::CoverageError, "xray/line_data", "field declares no spatial support ball");
    // The support ball must lie inside the body: check on a sphere of samples.
    {
        const int m = Dim == 2 ? 64 : 16;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < (Dim == 2 ? 1 : m); ++j) {
                Vec<Dim> u;
                if constexpr (Dim == 2) {
                    u << std::cos(2 * kPi * i / m), std::sin(2 * kPi * i / m);
                } else {
                    double th = kPi * (i + 0.5) / m, ph = 2 * kPi * j / m;
                    u << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
                }
                if (!body.inside(f.support_center + f.support_radius * u))
                    throw Error(ErrorKind::CoverageError, "xray/line_data",
                                "support of f is not swept by the chord family of the body");
            }
    }
    LineData<Dim> d;
    d.omega = omega.normalized();
    d.frame = orthonormal_complement<Dim>(d.omega);
    const double r = f.support_radius;
    d.dp = spacing;
    d.np = static_cast<int>(std::ceil(2.0 * r / spacing)) + 1;
    for (int a = 0; a < Dim - 1; ++a) d.p_lo[a] = d.frame[a].dot(f.support_center) - r;
    const double s_lo = std::max(0.0, f.t_lo);
    const double s_hi = std::max(s_lo, f.t_hi);
    const double hc = d.omega.dot(f.support_center);
    d.h_lo = hc - r - s_hi;
    d.dh = spacing;
    d.nh = static_cast<int>(std::ceil((2.0 * r + s_hi - s_lo) / spacing)) + 1;

    const int ns = static_cast<int>(std::ceil((s_hi - s_lo) / spacing));
    const double ds = ns > 0 ? (s_hi - s_lo) / ns : 0.0;
    const std::size_t npp = d.p_count();
    d.values.assign(npp * static_cast<std::size_t>(d.nh), 0.0);
    parallel_for(static_cast<std::size_t>(d.nh), [&](std::size_t ih) {
        for (std::size_t ip = 0; ip < npp; ++ip) {
            Vec<Dim> x = d.start_point(ip, static_cast<int>(ih));
            // skip lines that miss the support ball
            Vec<Dim> rel = x - f.support_center;
            double along = rel.dot(d.omega);
            if ((rel - along * d.omega).norm() > r) continue;
            double acc = 0.0;
            for (int k = 0; k <= ns; ++k) {
                double s = s_lo + k * ds;
                double w = (k == 0 || k == ns) ? 0.5 : 1.0;
                acc += w * f(s, x + s * d.omega);
            }
            d.values[ih * npp + ip] = acc * ds;
        }
    });
    return d;
}

/// Adds deterministic uniform noise of amplitude noise_level to every sample;
/// `key` separates noise streams of different directions.
template <int Dim>
LineData<Dim> perturb_line_data(const LineData<Dim>& d, double noise_level, std::uint64_t seed,
                                std::uint64_t key) {
    LineData<Dim> out = d;
    out.noise_sup = 0.0;
    if (noise_level == 0.0) return out;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double e = noise_level * hashed_uniform(seed, key, i);
        out.values[i] += e;
        out.noise_sup = std::max(out.noise_sup, std::abs(e));
    }
    return out;
}

}  // namespace tdxray
