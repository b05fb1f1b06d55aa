#pragma once

// Finite differences for d_t(A d_t u) - div(B grad u) = A F on the unit square,
// A = c^{n/2}, B = c^{n/2-1}, i.e. Box_{cg} u = F for the metric c * I.
// Leapfrog in time with A at half steps, conservative 5-point stencil in space.

#include "tdxray/conformal.hpp"
#include "tdxray/core.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <vector>

namespace tdxray {

/// Unit square [0,1]^2 with N cells per side, time step k, horizon T = nt k.
struct WaveGrid {
    int N = 48;
    double k = 0.5 / 48;
    double T = 2.0;
    int n_exp = 2;  // n in the exponents of A and B

    double h() const { return 1.0 / N; }
    int nt() const { return static_cast<int>(std::lround(T / k)); }
    double dt() const { return T / nt(); }  // k adjusted so nt * dt = T
    int side() const { return N + 1; }
    std::size_t nodes() const { return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side()); }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(side()) + static_cast<std::size_t>(j); }
    double x(int i) const { return i * h(); }
    int boundary_count() const { return 4 * N; }

    /// Boundary node b (counterclockwise from (0,0)) as grid indices.
    std::array<int, 2> boundary_node(int b) const {
        int s = b / N, r = b % N;
        switch (s) {
            case 0: return {r, 0};
            case 1: return {N, r};
            case 2: return {N - r, N};
            default: return {0, N - r};
        }
    }

    /// Grid with h and k halved.
    WaveGrid refined() const {
        WaveGrid g = *this;
        g.N *= 2;
        g.k *= 0.5;
        return g;
    }

    static WaveGrid with_cfl(int N, double T, double cfl = 0.5) {
        WaveGrid g;
        g.N = N;
        g.T = T;
        g.k = cfl / N;
        return g;
    }
};

using BoundaryData = std::function<double(double, const Vec<2>&)>;
using ScalarFactor = std::function<double(double, const Vec<2>&)>;

/// Adapts a conformal factor (double-evaluable) to a plain function of (t, x).
template <class Fn>
ScalarFactor scalar_factor(Fn fn) {
    return [fn = std::move(fn)](double t, const Vec<2>& x) { return fn(t, std::array<double, 2>{x[0], x[1]}); };
}

inline ScalarFactor unit_factor() {
    return [](double, const Vec<2>&) { return 1.0; };
}

/// Space-time solution, index n * nodes + idx(i, j).
struct WaveSolution {
    WaveGrid grid;
    std::vector<double> u;
    double energy_ratio = 0.0;  // sup_t (|u|_{H1} + |u_t|_{L2}) / |f|_{H1_0}

    double at(int n, int i, int j) const { return u[static_cast<std::size_t>(n) * grid.nodes() + grid.idx(i, j)]; }
    const double* level(int n) const { return u.data() + static_cast<std::size_t>(n) * grid.nodes(); }
};

namespace wave_detail {

inline void sample_factor(const ScalarFactor& c, const WaveGrid& g, double t, std::vector<double>& out) {
    out.resize(g.nodes());
    for (int i = 0; i <= g.N; ++i)
        for (int j = 0; j <= g.N; ++j) out[g.idx(i, j)] = c(t, Vec<2>(g.x(i), g.x(j)));
}

inline void check_cfl(const ScalarFactor& c, const WaveGrid& g) {
    double cmin = 1e300;
    std::vector<double> cs;
    for (int q = 0; q <= 8; ++q) {
        sample_factor(c, g, g.T * q / 8.0, cs);
        for (double v : cs) cmin = std::min(cmin, v);
    }
    if (!(cmin > 0.0)) throw Error(ErrorKind::Inadmissible, "wavesim/solve", "c not positive on the grid");
    const double limit = g.h() * std::sqrt(cmin) / std::sqrt(2.0);
    if (g.dt() > limit * (1.0 + 1e-12))
        throw Error(ErrorKind::CFLViolation, "wavesim/solve",
                    "k = " + std::to_string(g.dt()) + " exceeds " + std::to_string(limit));
}

/// Leapfrog driver. `time_of(n)` maps level n to physical time (reversed for
/// backward solves); boundary(n, level) writes Dirichlet values; source(n, level)
/// adds A F at level n (may be empty). observe(n, level) sees each new level.
template <class Boundary, class Source, class Observe>
void leapfrog(const ScalarFactor& c, const WaveGrid& g, const std::function<double(double)>& time_of,
              const std::vector<double>& level1, Boundary&& boundary, Source&& source, Observe&& observe) {
    check_cfl(c, g);
    const int N = g.N, nt = g.nt();
    const double k = g.dt(), h = g.h();
    const double pa = 0.5 * g.n_exp, pb = 0.5 * g.n_exp - 1.0;
    std::vector<double> prev(g.nodes(), 0.0), cur = level1, next(g.nodes(), 0.0);
    std::vector<double> cm, cp, cn, rhs(g.nodes());
    boundary(0, prev);
    observe(0, prev);
    boundary(1, cur);
    observe(1, cur);
    sample_factor(c, g, time_of(0.5), cm);
    for (int n = 1; n < nt; ++n) {
        sample_factor(c, g, time_of(n + 0.5), cp);
        sample_factor(c, g, time_of(n), cn);
        std::fill(rhs.begin(), rhs.end(), 0.0);
        source(n, rhs);  // A F at level n
        parallel_for(static_cast<std::size_t>(N - 1), [&](std::size_t ii) {
            const int i = static_cast<int>(ii) + 1;
            for (int j = 1; j < N; ++j) {
                const std::size_t q = g.idx(i, j);
                double lap;
                if (pb == 0.0) {
                    lap = cur[g.idx(i + 1, j)] + cur[g.idx(i - 1, j)] + cur[g.idx(i, j + 1)] + cur[g.idx(i, j - 1)] - 4.0 * cur[q];
                } else {
                    auto B = [&](std::size_t a) { return std::pow(cn[a], pb); };
                    const double b0 = B(q);
                    auto flux = [&](std::size_t a) { return 0.5 * (B(a) + b0) * (cur[a] - cur[q]); };
                    lap = flux(g.idx(i + 1, j)) + flux(g.idx(i - 1, j)) + flux(g.idx(i, j + 1)) + flux(g.idx(i, j - 1));
                }
                const double ap = std::pow(cp[q], pa), am = std::pow(cm[q], pa);
                next[q] = cur[q] + (am / ap) * (cur[q] - prev[q]) + k * k / ap * (lap / (h * h) + rhs[q]);
            }
        });
        for (int i = 0; i <= N; ++i) next[g.idx(i, 0)] = next[g.idx(i, N)] = 0.0;
        for (int j = 0; j <= N; ++j) next[g.idx(0, j)] = next[g.idx(N, j)] = 0.0;
        boundary(n + 1, next);
        for (double v : next)
            if (!std::isfinite(v)) throw Error(ErrorKind::Unstable, "wavesim/solve", "non-finite value at level " + std::to_string(n + 1));
        observe(n + 1, next);
        std::swap(prev, cur);
        std::swap(cur, next);
        std::swap(cm, cp);
    }
}

/// Discrete |u|_{H1(M)} + |u_t|_{L2(M)} at level n (u_t by central difference).
inline double interior_energy(const WaveGrid& g, const std::vector<double>& um, const std::vector<double>& u,
                              const std::vector<double>& up) {
    const double h = g.h(), k = g.dt();
    double l2 = 0.0, grad = 0.0, ut = 0.0;
    for (int i = 0; i <= g.N; ++i)
        for (int j = 0; j <= g.N; ++j) {
            const std::size_t q = g.idx(i, j);
            l2 += u[q] * u[q];
            double d = (up[q] - um[q]) / (2 * k);
            ut += d * d;
            if (i < g.N) grad += std::pow(u[g.idx(i + 1, j)] - u[q], 2);
            if (j < g.N) grad += std::pow(u[g.idx(i, j + 1)] - u[q], 2);
        }
    return std::sqrt((l2 + grad / (h * h)) * h * h) + std::sqrt(ut * h * h);
}

}  // namespace wave_detail

/// Space-time samples of boundary data on the boundary nodes: index n * 4N + b.
struct BoundaryField {
    WaveGrid grid;
    std::vector<double> values;

    double at(int n, int b) const { return values[static_cast<std::size_t>(n) * static_cast<std::size_t>(grid.boundary_count()) + static_cast<std::size_t>(b)]; }
};

inline BoundaryField sample_boundary(const BoundaryData& f, const WaveGrid& g) {
    BoundaryField bf;
    bf.grid = g;
    const int nb = g.boundary_count(), nt = g.nt();
    bf.values.resize(static_cast<std::size_t>(nt + 1) * static_cast<std::size_t>(nb));
    for (int n = 0; n <= nt; ++n)
        for (int b = 0; b < nb; ++b) {
            auto ij = g.boundary_node(b);
            bf.values[static_cast<std::size_t>(n) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)] =
                f(n * g.dt(), Vec<2>(g.x(ij[0]), g.x(ij[1])));
        }
    return bf;
}

/// Discrete boundary L2 norm: trapezoid in time, lumped mass h per boundary node.
inline double boundary_l2(const BoundaryField& f) {
    const auto& g = f.grid;
    const int nt = g.nt(), nb = g.boundary_count();
    double acc = 0.0;
    for (int n = 0; n <= nt; ++n) {
        double w = (n == 0 || n == nt) ? 0.5 : 1.0, s = 0.0;
        for (int b = 0; b < nb; ++b) s += f.at(n, b) * f.at(n, b);
        acc += w * s;
    }
    return std::sqrt(acc * g.h() * g.dt());
}

/// Discrete boundary H1_0 norm: L2 parts of f, f_t (central, one-sided at the
/// ends) and the tangential difference around the closed perimeter.
inline double boundary_h1(const BoundaryField& f) {
    const auto& g = f.grid;
    const int nt = g.nt(), nb = g.boundary_count();
    const double k = g.dt(), h = g.h();
    double acc = 0.0;
    for (int n = 0; n <= nt; ++n) {
        double w = (n == 0 || n == nt) ? 0.5 : 1.0, s = 0.0;
        for (int b = 0; b < nb; ++b) {
            double v = f.at(n, b);
            double ft = n == 0 ? (f.at(1, b) - v) / k : n == nt ? (v - f.at(nt - 1, b)) / k : (f.at(n + 1, b) - f.at(n - 1, b)) / (2 * k);
            double fs = (f.at(n, (b + 1) % nb) - v) / h;
            s += v * v + ft * ft + fs * fs;
        }
        acc += w * s;
    }
    return std::sqrt(acc * h * k);
}

/// Dirichlet problem with zero initial data. backward = true solves with zero
/// data at t = T (time reversal of the same scheme); the returned levels are
/// ordered in physical time either way.
inline WaveSolution solve_dirichlet(const ScalarFactor& c, const WaveGrid& g, const BoundaryData& f, bool backward = false) {
    const int nt = g.nt();
    const double T = nt * g.dt(), k = g.dt();
    auto time_of = [&](double n) { return backward ? T - n * k : n * k; };
    WaveSolution sol;
    sol.grid = g;
    sol.u.assign(static_cast<std::size_t>(nt + 1) * g.nodes(), 0.0);
    auto boundary = [&](int n, std::vector<double>& lvl) {
        const double t = time_of(n);
        for (int b = 0; b < g.boundary_count(); ++b) {
            auto ij = g.boundary_node(b);
            lvl[g.idx(ij[0], ij[1])] = f(t, Vec<2>(g.x(ij[0]), g.x(ij[1])));
        }
    };
    auto observe = [&](int n, const std::vector<double>& lvl) {
        int slot = backward ? nt - n : n;
        std::copy(lvl.begin(), lvl.end(), sol.u.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(slot) * g.nodes()));
    };
    std::vector<double> level1(g.nodes(), 0.0);
    wave_detail::leapfrog(c, g, time_of, level1, boundary, [](int, std::vector<double>&) {}, observe);

    double sup = 0.0;
    std::vector<double> a(g.nodes()), b(g.nodes()), d(g.nodes());
    for (int n = 1; n < nt; ++n) {
        std::copy_n(sol.level(n - 1), g.nodes(), a.begin());
        std::copy_n(sol.level(n), g.nodes(), b.begin());
        std::copy_n(sol.level(n + 1), g.nodes(), d.begin());
        sup = std::max(sup, wave_detail::interior_energy(g, a, b, d));
    }
    const double fn = boundary_h1(sample_boundary(f, g));
    sol.energy_ratio = fn > 0.0 ? sup / fn : 0.0;
    if (fn == 0.0 && sup > 0.0) throw Error(ErrorKind::Unstable, "wavesim/solve_dirichlet", "nonzero solution from zero data");
    return sol;
}

/// Zero boundary and initial data with interior source F (Box_{cg} u = F).
/// energy_ratio holds sup_t(|u|_{H1} + |u_t|_{L2}) / |F|_{L1 L2}.
inline WaveSolution solve_source(const ScalarFactor& c, const WaveGrid& g,
                                 const std::function<double(double, const Vec<2>&)>& F) {
    const int nt = g.nt();
    const double k = g.dt();
    auto time_of = [&](double n) { return n * k; };
    WaveSolution sol;
    sol.grid = g;
    sol.u.assign(static_cast<std::size_t>(nt + 1) * g.nodes(), 0.0);
    const double pa = 0.5 * g.n_exp;
    auto source = [&](int n, std::vector<double>& rhs) {
        const double t = n * k;
        for (int i = 1; i < g.N; ++i)
            for (int j = 1; j < g.N; ++j) {
                Vec<2> x(g.x(i), g.x(j));
                rhs[g.idx(i, j)] = std::pow(c(t, x), pa) * F(t, x);
            }
    };
    std::vector<double> level1(g.nodes(), 0.0);  // u(k) ~ k^2/2 F(0)
    for (int i = 1; i < g.N; ++i)
        for (int j = 1; j < g.N; ++j) level1[g.idx(i, j)] = 0.5 * k * k * F(0.0, Vec<2>(g.x(i), g.x(j)));
    auto observe = [&](int n, const std::vector<double>& lvl) {
        std::copy(lvl.begin(), lvl.end(), sol.u.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(n) * g.nodes()));
    };
    wave_detail::leapfrog(c, g, time_of, level1, [](int, std::vector<double>&) {}, source, observe);

    double sup = 0.0, l1l2 = 0.0;
    const double h = g.h();
    std::vector<double> a(g.nodes()), b(g.nodes()), d(g.nodes());
    for (int n = 0; n <= nt; ++n) {
        double s = 0.0;
        for (int i = 0; i <= g.N; ++i)
            for (int j = 0; j <= g.N; ++j) s += std::pow(F(n * k, Vec<2>(g.x(i), g.x(j))), 2);
        l1l2 += ((n == 0 || n == nt) ? 0.5 : 1.0) * std::sqrt(s * h * h) * k;
        if (n == 0 || n == nt) continue;
        std::copy_n(sol.level(n - 1), g.nodes(), a.begin());
        std::copy_n(sol.level(n), g.nodes(), b.begin());
        std::copy_n(sol.level(n + 1), g.nodes(), d.begin());
        sup = std::max(sup, wave_detail::interior_energy(g, a, b, d));
    }
    sol.energy_ratio = l1l2 > 0.0 ? sup / l1l2 : 0.0;
    return sol;
}

/// Outward conormal derivative B du/dnu on the boundary nodes, one-sided
/// second-order stencil; corners average their two sides.
inline BoundaryField dtn_from_solution(const ScalarFactor& c, const WaveSolution& s) {
    const auto& g = s.grid;
    const int N = g.N, nt = g.nt(), nb = g.boundary_count();
    const double h = g.h(), pb = 0.5 * g.n_exp - 1.0;
    BoundaryField out;
    out.grid = g;
    out.values.assign(static_cast<std::size_t>(nt + 1) * static_cast<std::size_t>(nb), 0.0);
    for (int n = 0; n <= nt; ++n) {
        auto side_deriv = [&](int i, int j, int di, int dj) {
            // inward step (di, dj); outward derivative = -(−3u0 + 4u1 − u2)/(2h)
            return -(-3.0 * s.at(n, i, j) + 4.0 * s.at(n, i + di, j + dj) - s.at(n, i + 2 * di, j + 2 * dj)) / (2.0 * h);
        };
        for (int b = 0; b < nb; ++b) {
            auto [i, j] = g.boundary_node(b);
            double acc = 0.0;
            int cnt = 0;
            if (i == 0) { acc += side_deriv(i, j, 1, 0); ++cnt; }
            if (i == N) { acc += side_deriv(i, j, -1, 0); ++cnt; }
            if (j == 0) { acc += side_deriv(i, j, 0, 1); ++cnt; }
            if (j == N) { acc += side_deriv(i, j, 0, -1); ++cnt; }
            double bcoef = pb == 0.0 ? 1.0 : std::pow(c(n * g.dt(), Vec<2>(g.x(i), g.x(j))), pb);
            out.values[static_cast<std::size_t>(n) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)] = bcoef * acc / cnt;
        }
    }
    return out;
}

inline BoundaryField dtn_apply(const ScalarFactor& c, const WaveGrid& g, const BoundaryData& f) {
    return dtn_from_solution(c, solve_dirichlet(c, g, f));
}

/// exp(1 - 1/(1 - (2z-1)^2)) on (0,1), zero elsewhere.
inline double unit_bump(double z) {
    if (z <= 0.0 || z >= 1.0) return 0.0;
    double w = 2.0 * z - 1.0;
    return std::exp(1.0 - 1.0 / (1.0 - w * w));
}

/// Perimeter arc length of a boundary point of the unit square (counterclockwise from (0,0)).
inline double perimeter_coordinate(const Vec<2>& x) {
    const double e = 1e-12;
    if (std::abs(x[1]) < e && x[0] < 1.0 - e) return x[0];
    if (std::abs(x[0] - 1.0) < e && x[1] < 1.0 - e) return 1.0 + x[1];
    if (std::abs(x[1] - 1.0) < e && x[0] > e) return 2.0 + (1.0 - x[0]);
    return 3.0 + (1.0 - x[1]);
}

/// Probe p: time bump on window p % 2 (of [0.05T, 0.55T] and [0.3T, 0.8T]) times
/// perimeter Fourier mode q = p / 2 (q = 0 constant, odd q cosine, even q sine,
/// frequency ceil(q/2) over the perimeter of length 4). Growing the count only
/// appends probes.
inline BoundaryData dtn_probe(int p, double T) {
    const int window = p % 2, q = p / 2;
    const double t0 = window == 0 ? 0.05 * T : 0.3 * T, len = 0.5 * T;
    const int m = (q + 1) / 2;
    return [=](double t, const Vec<2>& x) {
        double tb = unit_bump((t - t0) / len);
        if (tb == 0.0) return 0.0;
        double s = perimeter_coordinate(x);
        double mode = q == 0 ? 1.0 : (q % 2 == 1 ? std::cos(2 * kPi * m * s / 4.0) : std::sin(2 * kPi * m * s / 4.0));
        return tb * mode;
    };
}

struct DtNNormEstimate {
    double value = 0.0;  // max over probes of |(L1 - L2) f|_{L2} / |f|_{H1_0}
    std::vector<double> per_probe;
};

inline DtNNormEstimate dtn_norm_diff(const ScalarFactor& c1, const ScalarFactor& c2, const WaveGrid& g,
                                     const std::vector<BoundaryData>& probes) {
    if (probes.empty()) throw Error(ErrorKind::InvalidArgument, "wavesim/dtn_norm_diff", "no probes");
    DtNNormEstimate est;
    est.per_probe.resize(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        BoundaryField a = dtn_apply(c1, g, probes[p]);
        BoundaryField b = dtn_apply(c2, g, probes[p]);
        for (std::size_t q = 0; q < a.values.size(); ++q) a.values[q] -= b.values[q];
        double fn = boundary_h1(sample_boundary(probes[p], g));
        if (fn == 0.0) throw Error(ErrorKind::InvalidArgument, "wavesim/dtn_norm_diff", "zero probe");
        est.per_probe[p] = boundary_l2(a) / fn;
        est.value = std::max(est.value, est.per_probe[p]);
    }
    return est;
}

inline std::vector<BoundaryData> dtn_probes(int count, double T) {
    std::vector<BoundaryData> out;
    for (int p = 0; p < count; ++p) out.push_back(dtn_probe(p, T));
    return out;
}

struct RhoFactors {
    double rho0 = 0.0;  // 1 - c
    double rho1 = 0.0;  // c^{n/2} - 1
    double rho2 = 0.0;  // c^{n/2-1} - 1
    double rho = 0.0;   // rho1 - rho2
};

inline RhoFactors rho_factors(double c, int n) {
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgument, "wavesim/rho_factors", "c must be positive");
    RhoFactors r;
    r.rho0 = 1.0 - c;
    r.rho1 = std::pow(c, 0.5 * n) - 1.0;
    r.rho2 = std::pow(c, 0.5 * n - 1.0) - 1.0;
    r.rho = r.rho1 - r.rho2;
    const double alt = std::pow(c, 0.5 * n - 1.0) * (c - 1.0);
    if (std::abs(r.rho - alt) > 1e-12 * std::max(1.0, std::abs(alt)))
        throw Error(ErrorKind::InvalidArgument, "wavesim/rho_factors", "rho identity failed");
    return r;
}

struct RhoSampleReport {
    double identity_error = 0.0;  // max |rho - c^{n/2-1}(c-1)|
    double rho0_c0 = 0.0;         // sup |1 - c|
    double rho1_c1 = 0.0;         // sampled C^1 norms
    double rho2_c1 = 0.0;
};

/// Samples the rho factors of c on the grid at nt times; spatial and temporal
/// derivatives by central differences.
inline RhoSampleReport rho_sampled_check(const ScalarFactor& c, const WaveGrid& g, int n, int nt = 9) {
    RhoSampleReport rep;
    const double d = 1e-5;
    for (int q = 0; q < nt; ++q) {
        double t = g.T * q / std::max(1, nt - 1);
        for (int i = 0; i <= g.N; ++i)
            for (int j = 0; j <= g.N; ++j) {
                Vec<2> x(g.x(i), g.x(j));
                RhoFactors r = rho_factors(c(t, x), n);
                rep.identity_error = std::max(rep.identity_error, std::abs(r.rho - std::pow(c(t, x), 0.5 * n - 1.0) * (c(t, x) - 1.0)));
                rep.rho0_c0 = std::max(rep.rho0_c0, std::abs(r.rho0));
                auto c1 = [&](auto get) {
                    double m = std::abs(get(rho_factors(c(t, x), n)));
                    Vec<2> ex(d, 0.0), ey(0.0, d);
                    m = std::max(m, std::abs(get(rho_factors(c(t, x + ex), n)) - get(rho_factors(c(t, x - ex), n))) / (2 * d));
                    m = std::max(m, std::abs(get(rho_factors(c(t, x + ey), n)) - get(rho_factors(c(t, x - ey), n))) / (2 * d));
                    m = std::max(m, std::abs(get(rho_factors(c(t + d, x), n)) - get(rho_factors(c(t - d, x), n))) / (2 * d));
                    return m;
                };
                rep.rho1_c1 = std::max(rep.rho1_c1, c1([](const RhoFactors& f) { return f.rho1; }));
                rep.rho2_c1 = std::max(rep.rho2_c1, c1([](const RhoFactors& f) { return f.rho2; }));
            }
    }
    return rep;
}

struct KeyIdentityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;  // |lhs - rhs| / (|lhs| + |rhs| + floor)
};

/// lhs = int int (L_g - L_cg) f1 f2 over (0,T) x boundary;
/// rhs = int int rho1 d_t u1 d_t u2 - rho2 <grad u1, grad u2> over (0,T) x M,
/// u1 from f1 with c = 1 forward, u2 from f2 with c backward from t = T.
/// Trapezoid weights in time and space, lumped boundary mass, central differences.
inline KeyIdentityResult key_identity_check(const ScalarFactor& c, const WaveGrid& g, const BoundaryData& f1,
                                            const BoundaryData& f2, double floor = 1e-300) {
    const ScalarFactor one = unit_factor();
    WaveSolution u1 = solve_dirichlet(one, g, f1);
    WaveSolution w = solve_dirichlet(c, g, f1);
    WaveSolution u2 = solve_dirichlet(c, g, f2, true);
    BoundaryField d1 = dtn_from_solution(one, u1), dc = dtn_from_solution(c, w);
    BoundaryField F2 = sample_boundary(f2, g);
    const int N = g.N, nt = g.nt(), nb = g.boundary_count();
    const double h = g.h(), k = g.dt();
    KeyIdentityResult r;
    for (int n = 0; n <= nt; ++n) {
        double wt = (n == 0 || n == nt) ? 0.5 : 1.0, s = 0.0;
        for (int b = 0; b < nb; ++b) s += (d1.at(n, b) - dc.at(n, b)) * F2.at(n, b);
        r.lhs += wt * s;
    }
    r.lhs *= h * k;
    for (int n = 1; n < nt; ++n) {
        const double t = n * k;
        double s = 0.0;
        for (int i = 0; i <= N; ++i) {
            double wi = (i == 0 || i == N) ? 0.5 : 1.0;
            for (int j = 0; j <= N; ++j) {
                double wj = (j == 0 || j == N) ? 0.5 : 1.0;
                RhoFactors rf = rho_factors(c(t, Vec<2>(g.x(i), g.x(j))), g.n_exp);
                if (rf.rho1 == 0.0 && rf.rho2 == 0.0) continue;
                double a = (u1.at(n + 1, i, j) - u1.at(n - 1, i, j)) / (2 * k);
                double b = (u2.at(n + 1, i, j) - u2.at(n - 1, i, j)) / (2 * k);
                double term = rf.rho1 * a * b;
                if (rf.rho2 != 0.0 && i > 0 && i < N && j > 0 && j < N) {
                    double gx1 = (u1.at(n, i + 1, j) - u1.at(n, i - 1, j)) / (2 * h);
                    double gy1 = (u1.at(n, i, j + 1) - u1.at(n, i, j - 1)) / (2 * h);
                    double gx2 = (u2.at(n, i + 1, j) - u2.at(n, i - 1, j)) / (2 * h);
                    double gy2 = (u2.at(n, i, j + 1) - u2.at(n, i, j - 1)) / (2 * h);
                    term -= rf.rho2 * (gx1 * gx2 + gy1 * gy2);
                }
                s += wi * wj * term;
            }
        }
        r.rhs += s;
    }
    r.rhs *= h * h * k;
    r.gap = std::abs(r.lhs - r.rhs) / (std::abs(r.lhs) + std::abs(r.rhs) + floor);
    return r;
}

/// Boundary data of the identity check: f1 on the side x = 0 over t in (0, 0.8),
/// f2 on the same side over t in (0.9, 1.9).
inline BoundaryData identity_f1() {
    return [](double t, const Vec<2>& x) {
        if (x[0] != 0.0) return 0.0;
        return unit_bump(t / 0.8) * unit_bump((x[1] - 0.15) / 0.7);
    };
}
inline BoundaryData identity_f2() {
    return [](double t, const Vec<2>& x) {
        if (x[0] != 0.0) return 0.0;
        return unit_bump((t - 0.9) / 1.0) * unit_bump((x[1] - 0.2) / 0.6);
    };
}

/// 1 + s * bump(|x - (0.5,0.5)| / 0.3) * (1 + 0.3 sin(1.3 t)): equal to 1 near the boundary.
inline BumpFactor<2> interior_bump(double s) {
    BumpFactor<2> b;
    b.strength = s;
    b.center << 0.5, 0.5;
    b.radius = 0.3;
    b.time_amp = 0.3;
    b.time_freq = 1.3;
    return b;
}

/// Discrete |1 - c|_{L2((0,T) x M)}, trapezoid weights.
inline double factor_defect_l2(const ScalarFactor& c, const WaveGrid& g) {
    const int nt = g.nt(), N = g.N;
    double acc = 0.0;
    for (int n = 0; n <= nt; ++n) {
        double wt = (n == 0 || n == nt) ? 0.5 : 1.0;
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N; ++j) {
                double w = wt * ((i == 0 || i == N) ? 0.5 : 1.0) * ((j == 0 || j == N) ? 0.5 : 1.0);
                acc += w * std::pow(1.0 - c(n * g.dt(), Vec<2>(g.x(i), g.x(j))), 2);
            }
    }
    return std::sqrt(acc * g.h() * g.h() * g.dt());
}

struct ConformalRow {
    double s = 0.0;
    double defect_l2 = 0.0;   // |1 - c_s|_{L2}
    double dtn_norm = 0.0;    // probed |L_g - L_{c_s g}|
    double dtn_norm_2x = 0.0; // same with twice the probes (saturation diagnostic)
    double envelope = 0.0;    // C / log(1/dtn_norm)
};

struct ConformalCurve {
    std::vector<ConformalRow> rows;
    double C = 0.0;          // fitted on the largest-s row
    bool dominated = false;  // every row under the envelope
    bool monotone = false;   // dtn_norm increasing in s
};

/// Rows for the interior-bump family c_s; C = |1-c|_{L2} log(1/norm) at the
/// largest s, then every row is checked against C / log(1/norm).
inline ConformalCurve conformal_stability_experiment(const std::vector<double>& scales, const WaveGrid& g, int probe_count,
                                                     bool saturation = true) {
    ConformalCurve cur;
    const ScalarFactor one = unit_factor();
    auto probes = dtn_probes(probe_count, g.T);
    auto probes2 = dtn_probes(2 * probe_count, g.T);
    cur.rows.resize(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        ScalarFactor cs = scalar_factor(interior_bump(scales[i]));
        ConformalRow& r = cur.rows[i];
        r.s = scales[i];
        r.defect_l2 = factor_defect_l2(cs, g);
        r.dtn_norm = dtn_norm_diff(one, cs, g, probes).value;
        r.dtn_norm_2x = saturation ? dtn_norm_diff(one, cs, g, probes2).value : r.dtn_norm;
    }
    std::size_t top = 0;
    for (std::size_t i = 0; i < scales.size(); ++i)
        if (scales[i] > scales[top]) top = i;
    const auto& rt = cur.rows[top];
    cur.C = rt.dtn_norm > 0.0 && rt.dtn_norm < 1.0 ? rt.defect_l2 * std::log(1.0 / rt.dtn_norm) : 0.0;
    cur.dominated = cur.C > 0.0;
    for (auto& r : cur.rows) {
        if (!(r.dtn_norm > 0.0 && r.dtn_norm < 1.0)) {
            r.envelope = std::numeric_limits<double>::quiet_NaN();
            if (r.s != 0.0) cur.dominated = false;
            continue;
        }
        r.envelope = cur.C / std::log(1.0 / r.dtn_norm);
        if (r.defect_l2 > r.envelope * (1.0 + 1e-12)) cur.dominated = false;
    }
    std::vector<std::size_t> order(scales.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scales[a] < scales[b]; });
    cur.monotone = true;
    for (std::size_t i = 1; i < order.size(); ++i)
        if (!(cur.rows[order[i]].dtn_norm > cur.rows[order[i - 1]].dtn_norm)) cur.monotone = false;
    return cur;
}

}  // namespace tdxray
