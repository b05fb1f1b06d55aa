#pragma once

// Truncated Fourier inversion over B_R using visible-region data only, the
// R(delta) selection rule, and the log-stability experiment.

#include "tdxray/core.hpp"
#include "tdxray/fields.hpp"
#include "tdxray/spectral.hpp"
#include "tdxray/xray.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace tdxray {

struct RChoice {
    double R = 0.0;
    double lower = 0.0;  // 3 (1 - eps) log(1/delta)
    double upper = 0.0;  // (1 - eps/2) log(1/delta) / (n + 2)
    bool conflict = false;
};

/// R = 3(1-eps) log(1/delta), capped by (1-eps/2) log(1/delta)/(n+2); the cap
/// sets `conflict`. InfeasibleSandwich when the result is not above 1.
inline RChoice choose_R(double delta, double epsilon, int n) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::InvalidArgument, "reconstruct/choose_R", "epsilon outside (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InfeasibleSandwich, "reconstruct/choose_R", "delta outside (0,1)");
    const double L = std::log(1.0 / delta);
    RChoice c;
    c.lower = 3.0 * (1.0 - epsilon) * L;
    c.upper = (1.0 - 0.5 * epsilon) * L / (n + 2);
    c.conflict = c.lower > c.upper;
    c.R = std::min(c.lower, c.upper);
    if (c.R <= 1.0)
        throw Error(ErrorKind::InfeasibleSandwich, "reconstruct/choose_R",
                    "no R > 1 fits the sandwich at delta = " + std::to_string(delta));
    return c;
}

struct ReconstructionPlan {
    double R = 2.0;
    double a = 4.0;
    double epsilon = 0.5;
    double delta = 0.0;
    bool conflict = false;
    bool keep_hidden = false;  // use hidden lattice values instead of zeroing them

    void validate(int n) const {
        if (!(R > 1.0)) throw Error(ErrorKind::InvalidArgument, "reconstruct/plan", "R must exceed 1");
        if (!(a > n + 1)) throw Error(ErrorKind::InvalidArgument, "reconstruct/plan", "a must exceed n+1");
    }
};

inline ReconstructionPlan make_plan(double delta, double epsilon, int n) {
    RChoice c = choose_R(delta, epsilon, n);
    ReconstructionPlan p;
    p.R = c.R;
    p.a = n + 2;
    p.epsilon = epsilon;
    p.delta = delta;
    p.conflict = c.conflict;
    return p;
}

/// C R^{n+1-a}.
inline double tail_bound(double R, double a, int n, double C) {
    if (!(a > n + 1) || !(R > 1.0)) throw Error(ErrorKind::InvalidArgument, "reconstruct/tail_bound", "needs a > n+1, R > 1");
    return C * std::pow(R, n + 1 - a);
}

/// Lattice quadrature of |f^| over {|(tau,xi)| > R}.
template <int Dim>
double tail_integral(const SpectralField<Dim>& s, double R) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        FrequencyPoint<Dim> p = s.lattice.point(i);
        if (p.tau * p.tau + p.xi.squaredNorm() > R * R) acc += std::abs(s.values[i]);
    }
    return acc * s.lattice.cell_volume();
}

template <int Dim>
bool in_ball(const FrequencyPoint<Dim>& p, double R) {
    return p.tau * p.tau + p.xi.squaredNorm() <= R * R;
}

template <int Dim>
struct Reconstruction {
    SpaceTimeGrid<Dim> grid;
    std::vector<double> samples;  // real part, time-major
    double imag_residual = 0.0;   // max |Im| / max |Re|
};

/// f_rec(t,x) = (2 pi)^{-(n+1)} sum over lattice, B_R and (unless keep_hidden)
/// the visible region, of F(tau,xi) exp(i(t tau + x.xi)) dtau dxi^n.
template <int Dim>
Reconstruction<Dim> truncated_inversion(const SpectralField<Dim>& s, const ReconstructionPlan& plan,
                                        const SpaceTimeGrid<Dim>& g) {
    using namespace spectral_detail;
    plan.validate(Dim);
    const auto& l = s.lattice;
    if (plan.R > l.inscribed_radius() + 1e-12)
        throw Error(ErrorKind::RTooLargeForGrid, "reconstruct/truncated_inversion",
                    "R = " + std::to_string(plan.R) + " exceeds lattice radius " + std::to_string(l.inscribed_radius()));
    std::vector<Complex> data(s.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        FrequencyPoint<Dim> p = l.point(i);
        if (!in_ball(p, plan.R)) continue;
        if (!plan.keep_hidden && classify_region(p) == Region::Hidden) continue;
        data[i] = s.values[i];
    }
    std::vector<int> shape(Dim + 1, l.nxi);
    shape[Dim] = l.ntau;
    for (int a = 0; a < Dim; ++a)
        data = apply_along(data, shape, a, phase_matrix(g.nx, g.x_lo[a], g.dx, l.nxi, l.xi_lo, l.dxi, 1.0, l.dxi / (2 * kPi)), g.nx);
    data = apply_along(data, shape, Dim, phase_matrix(g.nt, g.t0, g.dt, l.ntau, l.tau_lo, l.dtau, 1.0, l.dtau / (2 * kPi)), g.nt);
    Reconstruction<Dim> r;
    r.grid = g;
    r.samples.resize(data.size());
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        r.samples[i] = data[i].real();
        re = std::max(re, std::abs(data[i].real()));
        im = std::max(im, std::abs(data[i].imag()));
    }
    r.imag_residual = re > 0.0 ? im / re : im;
    return r;
}

/// Slice values on the visible lattice points inside B_{R_max}, computed from
/// line data: clean[k] = F(If)(xi_k, omega_k), noise[k] = the same slice of
/// unit-amplitude deterministic noise added to that direction's data.
/// Mirror points (-tau,-xi) share omega and therefore data, which keeps the
/// filled spectrum Hermitian for real data.
template <int Dim>
struct VisibleSpectrum {
    FrequencyLattice<Dim> lattice;
    double R_max = 0.0;
    std::vector<std::size_t> index;  // increasing lattice indices
    std::vector<Complex> clean;
    std::vector<Complex> noise;
    double data_sup = 0.0;  // max sup-norm of the clean line data over directions

    /// S + delta N on visible points of B_R; zero elsewhere.
    SpectralField<Dim> field(double delta, double R) const {
        SpectralField<Dim> s;
        s.lattice = lattice;
        s.values.assign(lattice.size(), Complex(0.0));
        s.region.resize(lattice.size());
        for (std::size_t i = 0; i < lattice.size(); ++i) s.region[i] = classify_region(lattice.point(i));
        for (std::size_t k = 0; k < index.size(); ++k)
            if (in_ball(lattice.point(index[k]), R)) s.values[index[k]] = clean[k] + delta * noise[k];
        return s;
    }
};

template <int Dim>
VisibleSpectrum<Dim> visible_spectrum(const SpaceTimeField<Dim>& f, const FrequencyLattice<Dim>& lattice, double R_max,
                                      const ConvexBody<Dim>& body, std::uint64_t seed, double spacing = 0.25) {
    if (R_max > lattice.inscribed_radius() + 1e-12)
        throw Error(ErrorKind::RTooLargeForGrid, "reconstruct/visible_spectrum", "R exceeds lattice radius");
    SpectralField<Dim> probe;  // only for mirror()
    probe.lattice = lattice;
    VisibleSpectrum<Dim> v;
    v.lattice = lattice;
    v.R_max = R_max;
    std::vector<std::size_t> reps;  // one representative per mirror pair
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        FrequencyPoint<Dim> p = lattice.point(i);
        if (!in_ball(p, R_max) || classify_region(p) != Region::Visible) continue;
        v.index.push_back(i);
        std::size_t m = probe.mirror(i);
        if (m >= i) reps.push_back(i);
    }
    v.clean.resize(v.index.size());
    v.noise.resize(v.index.size());
    std::vector<double> sups(reps.size());
    parallel_for(reps.size(), [&](std::size_t r) {
        const std::size_t i = reps[r];
        FrequencyPoint<Dim> p = lattice.point(i);
        Vec<Dim> omega = visible_direction(p);
        LineData<Dim> d = line_data(f, omega, body, spacing);
        sups[r] = d.sup_norm();
        LineData<Dim> nd = d;
        for (std::size_t q = 0; q < nd.values.size(); ++q) nd.values[q] = hashed_uniform(seed, i, q);
        Complex s = slice(d, p.xi), n = slice(nd, p.xi);
        auto put = [&](std::size_t flat, Complex a, Complex b) {
            auto it = std::lower_bound(v.index.begin(), v.index.end(), flat);
            std::size_t k = static_cast<std::size_t>(it - v.index.begin());
            v.clean[k] = a;
            v.noise[k] = b;
        };
        put(i, s, n);
        std::size_t m = probe.mirror(i);
        if (m != i && m < lattice.size()) put(m, std::conj(s), std::conj(n));
    });
    for (double s : sups) v.data_sup = std::max(v.data_sup, s);
    return v;
}

/// L2 over the sampling box and max-abs difference.
template <int Dim>
std::pair<double, double> field_errors(const std::vector<double>& a, const std::vector<double>& b,
                                       const SpaceTimeGrid<Dim>& g) {
    double s2 = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s2 += d * d;
        mx = std::max(mx, std::abs(d));
    }
    return {std::sqrt(s2 * g.cell_volume()), mx};
}

struct ParsevalSplit {
    double error_sq = 0.0;        // ||f - f_rec||^2 on the grid
    double hidden_in_ball = 0.0;  // (2 pi)^{-(n+1)} sum |f^|^2 over hidden points in B_R
    double out_of_ball = 0.0;
    double relative_gap = 0.0;
};

/// Reconstructs from the exact lattice transform with hidden points zeroed and
/// compares the squared error against the two excluded spectral energies.
template <int Dim>
ParsevalSplit parseval_split(const std::vector<double>& samples, const SpaceTimeGrid<Dim>& g, double R) {
    const auto l = FrequencyLattice<Dim>::dual_of(g);
    SpectralField<Dim> s = fourier_from_samples(samples, g, l);
    ReconstructionPlan plan;
    plan.R = R;
    Reconstruction<Dim> r = truncated_inversion(s, plan, g);
    ParsevalSplit out;
    auto e = field_errors(samples, r.samples, g);
    out.error_sq = e.first * e.first;
    const double w = l.cell_volume() / std::pow(2 * kPi, Dim + 1);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        FrequencyPoint<Dim> p = l.point(i);
        double e2 = std::norm(s.values[i]) * w;
        if (!in_ball(p, R)) out.out_of_ball += e2;
        else if (classify_region(p) == Region::Hidden) out.hidden_in_ball += e2;
    }
    double rhs = out.hidden_in_ball + out.out_of_ball;
    out.relative_gap = std::abs(out.error_sq - rhs) / std::max(rhs, std::numeric_limits<double>::min());
    return out;
}

struct StabilityRow {
    double delta = 0.0;
    double R = std::numeric_limits<double>::quiet_NaN();
    double l2_error = std::numeric_limits<double>::quiet_NaN();
    double c0_error = std::numeric_limits<double>::quiet_NaN();
    double envelope = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;
    bool conflict = false;
};

struct StabilityCurve {
    std::vector<StabilityRow> rows;
    double C_fit = 0.0;       // least squares through the origin of err vs 1/log(1/delta)
    double r_squared = 0.0;
    double C_envelope = 0.0;  // smallest C with err <= C/log(1/delta) on all fitted rows
    int fitted_rows = 0;
    bool dominated = false;   // every fitted row lies under the envelope
};

/// err = C x with x = 1/log(1/delta), fitted over feasible rows with delta > 0.
inline void fit_log_envelope(StabilityCurve& c) {
    std::vector<double> xs, ys;
    for (const auto& r : c.rows)
        if (r.feasible && r.delta > 0.0) {
            xs.push_back(1.0 / std::log(1.0 / r.delta));
            ys.push_back(r.l2_error);
        }
    c.fitted_rows = static_cast<int>(xs.size());
    if (xs.empty()) return;
    double sxy = 0.0, sxx = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += xs[i] * ys[i];
        sxx += xs[i] * xs[i];
        mean += ys[i];
        c.C_envelope = std::max(c.C_envelope, ys[i] / xs[i]);
    }
    mean /= static_cast<double>(ys.size());
    c.C_fit = sxy / sxx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ss_res += std::pow(ys[i] - c.C_fit * xs[i], 2);
        ss_tot += std::pow(ys[i] - mean, 2);
    }
    c.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    c.dominated = true;
    for (auto& r : c.rows) {
        if (r.delta > 0.0) r.envelope = c.C_envelope / std::log(1.0 / r.delta);
        else r.envelope = 0.0;
        if (r.feasible && r.delta > 0.0 && r.l2_error > r.envelope * (1.0 + 1e-12)) c.dominated = false;
    }
}

/// For each delta: noisy visible spectrum S + delta N, R from choose_R
/// (delta = 0 uses the largest R the data covers), truncated inversion, and
/// errors against the samples of f on g. Infeasible deltas are flagged rows.
template <int Dim>
StabilityCurve stability_curve(const SpaceTimeField<Dim>& f, const SpaceTimeGrid<Dim>& g, const ConvexBody<Dim>& body,
                               const std::vector<double>& noise_levels, double epsilon, std::uint64_t seed,
                               double spacing = 0.25) {
    for (std::size_t i = 0; i < noise_levels.size(); ++i) {
        if (noise_levels[i] < 0.0) throw Error(ErrorKind::InvalidArgument, "reconstruct/stability_curve", "negative noise level");
        if (i > 0 && !(noise_levels[i] < noise_levels[i - 1]))
            throw Error(ErrorKind::InvalidArgument, "reconstruct/stability_curve", "noise levels must strictly decrease");
    }
    const auto lattice = FrequencyLattice<Dim>::dual_of(g);
    const double R_lattice = lattice.inscribed_radius();
    StabilityCurve curve;
    std::vector<ReconstructionPlan> plans(noise_levels.size());
    double R_max = 1.0;
    for (std::size_t i = 0; i < noise_levels.size(); ++i) {
        StabilityRow row;
        row.delta = noise_levels[i];
        try {
            if (row.delta == 0.0) {
                plans[i].R = R_lattice;
                plans[i].a = Dim + 2;
                plans[i].epsilon = epsilon;
            } else {
                plans[i] = make_plan(row.delta, epsilon, Dim);
            }
            if (plans[i].R > R_lattice)
                throw Error(ErrorKind::RTooLargeForGrid, "reconstruct/stability_curve", "R beyond lattice");
            row.R = plans[i].R;
            row.conflict = plans[i].conflict;
            row.feasible = true;
            R_max = std::max(R_max, row.R);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InfeasibleSandwich && e.kind() != ErrorKind::RTooLargeForGrid) throw;
        }
        curve.rows.push_back(row);
    }
    const std::vector<double> truth = sample(f, g);
    VisibleSpectrum<Dim> vs = visible_spectrum(f, lattice, R_max, body, seed, spacing);
    for (std::size_t i = 0; i < curve.rows.size(); ++i) {
        auto& row = curve.rows[i];
        if (!row.feasible) continue;
        Reconstruction<Dim> rec = truncated_inversion(vs.field(row.delta, row.R), plans[i], g);
        auto e = field_errors(truth, rec.samples, g);
        row.l2_error = e.first;
        row.c0_error = e.second;
    }
    fit_log_envelope(curve);
    return curve;
}

}  // namespace tdxray
