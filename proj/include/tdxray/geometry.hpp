#pragma once

// Strictly convex domains given as sublevel sets {phi < 0}, boundary rays,
// exit times, and geodesics of conformally Euclidean metrics c(t,x) * I.

#include "tdxray/conformal.hpp"
#include "tdxray/core.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tdxray {

inline constexpr double kBoundaryTol = 1e-10;
inline constexpr double kGrazingTol = 1e-8;

template <int Dim>
struct ConvexBody {
    std::function<double(const Vec<Dim>&)> level_fn;
    std::function<Vec<Dim>(const Vec<Dim>&)> gradient_fn;
    Vec<Dim> center = Vec<Dim>::Zero();
    Vec<Dim> box_lo = Vec<Dim>::Zero();
    Vec<Dim> box_hi = Vec<Dim>::Zero();
    double diameter = 0.0;
    std::string kind;

    double level(const Vec<Dim>& x) const { return level_fn(x); }
    bool inside(const Vec<Dim>& x) const { return level_fn(x) < 0.0; }
    Vec<Dim> normal(const Vec<Dim>& x) const { return gradient_fn(x).normalized(); }

    static ConvexBody ellipsoid(const Vec<Dim>& center, const Vec<Dim>& semiaxes) {
        ConvexBody b;
        b.center = center;
        b.box_lo = center - semiaxes;
        b.box_hi = center + semiaxes;
        b.diameter = 2.0 * semiaxes.maxCoeff();
        b.kind = "ellipsoid";
        Vec<Dim> inv2 = semiaxes.cwiseProduct(semiaxes).cwiseInverse();
        b.level_fn = [center, inv2](const Vec<Dim>& x) {
            Vec<Dim> d = x - center;
            return d.cwiseProduct(d).dot(inv2) - 1.0;
        };
        b.gradient_fn = [center, inv2](const Vec<Dim>& x) -> Vec<Dim> {
            return 2.0 * (x - center).cwiseProduct(inv2);
        };
        return b;
    }

    static ConvexBody ball(const Vec<Dim>& center, double radius) {
        ConvexBody b = ellipsoid(center, Vec<Dim>::Constant(radius));
        b.kind = "ball";
        return b;
    }

    /// Point on the boundary along center + r * u (bodies are star-shaped about center).
    Vec<Dim> radial_boundary_point(const Vec<Dim>& u) const {
        double lo = 0.0, hi = diameter;
        while (level_fn(center + hi * u) < 0.0) hi *= 2.0;
        for (int i = 0; i < 200 && hi - lo > 1e-15 * diameter; ++i) {
            double mid = 0.5 * (lo + hi);
            (level_fn(center + mid * u) < 0.0 ? lo : hi) = mid;
        }
        return center + 0.5 * (lo + hi) * u;
    }
};

template <int Dim>
struct BoundaryRay {
    Vec<Dim> x;
    Vec<Dim> omega;
    Vec<Dim> normal;
};

/// Builds a ray at boundary point x with direction omega and checks the
/// invariants (on boundary, unit, strictly inward).
template <int Dim>
BoundaryRay<Dim> make_ray(const ConvexBody<Dim>& body, const Vec<Dim>& x, const Vec<Dim>& omega) {
    if (std::abs(body.level(x)) > 1e-8)
        throw Error(ErrorKind::InvalidArgument, "geometry/make_ray", "base point is not on the boundary");
    BoundaryRay<Dim> r{x, omega.normalized(), body.normal(x)};
    if (r.omega.dot(r.normal) >= -kGrazingTol)
        throw Error(ErrorKind::TangentRay, "geometry/make_ray", "direction is not strictly inward");
    return r;
}

/// Length of the straight chord from ray.x in direction ray.omega.
template <int Dim>
double exit_time(const ConvexBody<Dim>& body, const BoundaryRay<Dim>& ray) {
    if (ray.omega.dot(ray.normal) >= -kGrazingTol)
        throw Error(ErrorKind::TangentRay, "geometry/exit_time", "<omega, nu> >= -grazing_tol");
    auto phi = [&](double s) { return body.level(ray.x + s * ray.omega); };

    // Bracket: the last interior sample before the first exterior one.
    const int samples = 256;
    const double step = 1.01 * body.diameter / samples;
    double lo = -1.0, hi = -1.0;
    for (int k = 1; k <= samples; ++k) {
        double s = k * step;
        if (phi(s) >= 0.0) {
            hi = s;
            break;
        }
        lo = s;
    }
    if (lo < 0.0) {
        // Chord shorter than one sample: search on a geometric grid towards 0.
        double s = step;
        while (s > 1e-14 && phi(s) >= 0.0) {
            hi = s;
            s *= 0.5;
        }
        if (s <= 1e-14)
            throw Error(ErrorKind::TangentRay, "geometry/exit_time", "no interior point along the ray");
        lo = s;
    }
    if (hi < 0.0) throw Error(ErrorKind::NoExit, "geometry/exit_time", "chord longer than the diameter");

    while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        (phi(mid) < 0.0 ? lo : hi) = mid;
    }
    double s = 0.5 * (lo + hi);
    for (int i = 0; i < 2; ++i) {
        double d = body.gradient_fn(ray.x + s * ray.omega).dot(ray.omega);
        if (d == 0.0) break;
        double next = s - phi(s) / d;
        if (next > lo - 1e-10 && next < hi + 1e-10) s = next;
    }
    return s;
}

/// Quasi-uniform boundary points (angles in 2-D, spherical Fibonacci in 3-D) times
/// inward directions. With n_directions == 1 the direction is the inward normal.
template <int Dim>
std::vector<BoundaryRay<Dim>> sample_inward_bundle(const ConvexBody<Dim>& body, int n_boundary,
                                                   int n_directions) {
    static_assert(Dim == 2 || Dim == 3);
    if (n_boundary < 1 || n_directions < 1)
        throw Error(ErrorKind::InvalidArgument, "geometry/sample_inward_bundle", "counts must be >= 1");
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<BoundaryRay<Dim>> rays;
    rays.reserve(static_cast<std::size_t>(n_boundary) * static_cast<std::size_t>(n_directions));
    for (int i = 0; i < n_boundary; ++i) {
        Vec<Dim> u;
        if constexpr (Dim == 2) {
            double th = 2.0 * kPi * i / n_boundary;
            u << std::cos(th), std::sin(th);
        } else {
            double z = 1.0 - 2.0 * (i + 0.5) / n_boundary;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            u << r * std::cos(golden * i), r * std::sin(golden * i), z;
        }
        Vec<Dim> x = body.radial_boundary_point(u);
        Vec<Dim> nu = body.normal(x);
        for (int j = 0; j < n_directions; ++j) {
            Vec<Dim> w;
            if (n_directions == 1) {
                w = -nu;
            } else if constexpr (Dim == 2) {
                double a = -0.5 * kPi + kPi * (j + 0.5) / n_directions;
                Vec<Dim> tangent(-nu[1], nu[0]);
                w = std::cos(a) * (-nu) + std::sin(a) * tangent;
            } else {
                Vec<Dim> e1 = nu.unitOrthogonal();
                Vec<Dim> e2 = nu.cross(e1);
                double z = 1.0 - (j + 0.5) / n_directions;
                double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                w = z * (-nu) + r * (std::cos(golden * j) * e1 + std::sin(golden * j) * e2);
            }
            rays.push_back({x, w.normalized(), nu});
        }
    }
    return rays;
}

/// Metric c(t,x) * I. Euclidean metrics are traced exactly as straight chords.
template <int Dim>
struct MetricSpec {
    enum class Kind { euclidean, conformal };
    Kind kind = Kind::euclidean;
    std::function<std::pair<double, Vec<Dim>>(double, const Vec<Dim>&)> c_and_grad;

    static MetricSpec euclidean() { return {}; }

    template <class Fn>
    static MetricSpec conformal(Fn fn) {
        MetricSpec m;
        m.kind = Kind::conformal;
        m.c_and_grad = [fn = std::move(fn)](double t, const Vec<Dim>& x) {
            return value_and_gradient<Dim>(fn, t, x);
        };
        return m;
    }

    /// h(t,x,p) = |p| / sqrt(c): the Hamiltonian of the metric c * I.
    double hamiltonian(double t, const Vec<Dim>& x, const Vec<Dim>& p) const {
        double c = kind == Kind::euclidean ? 1.0 : c_and_grad(t, x).first;
        return p.norm() / std::sqrt(c);
    }
};

/// Phase-space state of a ray: position and covector.
template <int Dim>
struct RayState {
    Vec<Dim> x;
    Vec<Dim> p;
};

/// dx/dt = -h_p, dp/dt = h_x for h = |p| / sqrt(c(t,x)).
template <int Dim>
RayState<Dim> ray_rhs(const MetricSpec<Dim>& m, double t, const RayState<Dim>& s) {
    double pn = s.p.norm();
    if (m.kind == MetricSpec<Dim>::Kind::euclidean) return {-s.p / pn, Vec<Dim>::Zero()};
    auto [c, g] = m.c_and_grad(t, s.x);
    double isc = 1.0 / std::sqrt(c);
    return {-isc * s.p / pn, -0.5 * pn * isc / c * g};
}

template <int Dim>
RayState<Dim> rk4_step(const MetricSpec<Dim>& m, double t, const RayState<Dim>& s, double h) {
    auto add = [](const RayState<Dim>& a, const RayState<Dim>& k, double f) {
        return RayState<Dim>{a.x + f * k.x, a.p + f * k.p};
    };
    RayState<Dim> k1 = ray_rhs(m, t, s);
    RayState<Dim> k2 = ray_rhs(m, t + 0.5 * h, add(s, k1, 0.5 * h));
    RayState<Dim> k3 = ray_rhs(m, t + 0.5 * h, add(s, k2, 0.5 * h));
    RayState<Dim> k4 = ray_rhs(m, t + h, add(s, k3, h));
    return {s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            s.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p)};
}

template <int Dim>
struct GeodesicPath {
    std::vector<double> times;  // measured from the entry time
    std::vector<Vec<Dim>> points;
    std::vector<Vec<Dim>> velocities;
    std::vector<Vec<Dim>> momenta;
    double exit_time = 0.0;
    double t_start = 0.0;
    MetricSpec<Dim> metric;
    bool straight = false;

    /// Position at arc parameter s in [0, exit_time]; conformal paths re-integrate
    /// one RK4 step from the preceding node.
    Vec<Dim> position(double s) const {
        if (straight) return points.front() + s * velocities.front();
        auto it = std::upper_bound(times.begin(), times.end(), s);
        std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
        if (i >= times.size() - 1) i = times.size() - 2;
        double h = s - times[i];
        if (h == 0.0) return points[i];
        return rk4_step(metric, t_start + times[i], RayState<Dim>{points[i], momenta[i]}, h).x;
    }
};

/// Integrates the ray from a boundary ray with a fixed-step RK4 until it leaves
/// the body (phi >= 0); the last step is shortened by bisection onto the boundary.
template <int Dim>
GeodesicPath<Dim> geodesic_trace(const MetricSpec<Dim>& metric, const ConvexBody<Dim>& body,
                                 const BoundaryRay<Dim>& ray, double dt, double t_start = 0.0,
                                 double t_max = -1.0) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "geometry/geodesic_trace", "dt must be > 0");
    if (ray.omega.dot(ray.normal) >= -kGrazingTol)
        throw Error(ErrorKind::TangentRay, "geometry/geodesic_trace", "<omega, nu> >= -grazing_tol");
    if (t_max <= 0.0) t_max = 20.0 * body.diameter;

    GeodesicPath<Dim> path;
    path.metric = metric;
    path.t_start = t_start;
    if (metric.kind == MetricSpec<Dim>::Kind::euclidean) {
        double tau = exit_time(body, ray);
        int n = std::max(1, static_cast<int>(std::ceil(tau / dt)));
        for (int i = 0; i <= n; ++i) {
            double s = tau * i / n;
            path.times.push_back(s);
            path.points.push_back(ray.x + s * ray.omega);
            path.velocities.push_back(ray.omega);
            path.momenta.push_back(-ray.omega);
        }
        path.exit_time = tau;
        path.straight = true;
        return path;
    }

    RayState<Dim> s{ray.x, -ray.omega};
    auto c0 = metric.c_and_grad(t_start, ray.x).first;
    s.p *= std::sqrt(c0);  // unit speed in the metric c * I
    double t = 0.0;
    auto record = [&](double tt, const RayState<Dim>& st) {
        path.times.push_back(tt);
        path.points.push_back(st.x);
        path.velocities.push_back(ray_rhs(metric, t_start + tt, st).x);
        path.momenta.push_back(st.p);
    };
    record(t, s);
    while (true) {
        if (t > t_max)
            throw Error(ErrorKind::NoExit, "geometry/geodesic_trace",
                        "ray from (" + std::to_string(ray.x[0]) + ", " + std::to_string(ray.x[1]) +
                            ") did not exit before T_max");
        RayState<Dim> next = rk4_step(metric, t_start + t, s, dt);
        if (body.level(next.x) < 0.0) {
            t += dt;
            s = next;
            record(t, s);
            continue;
        }
        double lo = 0.0, hi = dt;
        for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
            double mid = 0.5 * (lo + hi);
            RayState<Dim> trial = rk4_step(metric, t_start + t, s, mid);
            (body.level(trial.x) < 0.0 ? lo : hi) = mid;
            if (std::abs(body.level(trial.x)) < 1e-14) {
                lo = hi = mid;
                break;
            }
        }
        double h = 0.5 * (lo + hi);
        if (h > 1e-14) {
            s = rk4_step(metric, t_start + t, s, h);
            t += h;
            record(t, s);
        }
        break;
    }
    path.exit_time = t;
    return path;
}

}  // namespace tdxray
