#pragma once

// Acceptance suite: twelve cross-module criteria, each reported with the
// measured value, its tolerance and a pass flag. Failures are reported, not thrown.

#include "tdxray/harness/csv.hpp"
#include "tdxray/harness/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace tdxray::harness {

struct AcceptanceOptions {
    double tolerance_scale = 1.0;  // multiplies every tolerance slack
    std::string only;              // module filter; empty runs everything
    std::uint64_t seed = 0;
    std::filesystem::path scratch;  // working directory of the determinism check
};

struct CriterionResult {
    int id = 0;
    std::string name;
    std::string modules;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string relation;  // how measured compares against tolerance
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double time_limit = 0.0;  // 0: none
};

inline const std::vector<std::string>& module_names() {
    static const std::vector<std::string> m{"geometry", "xray", "spectral", "reconstruct", "beams", "wavesim", "harness"};
    return m;
}

namespace acceptance_detail {

inline CriterionResult started(int id, std::string name, std::string modules) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    r.modules = std::move(modules);
    return r;
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline ConvexBody<2> default_body() { return ConvexBody<2>::ball(Vec<2>::Zero(), 5.0); }

/// Closed-form transform of the (uncut) Gaussian bump.
inline Complex gaussian_fhat(const GaussianBumpParams<2>& p, double tau, const Vec<2>& xi) {
    const double s2pi = std::sqrt(2 * kPi);
    Complex v = p.amplitude * s2pi * p.sigma_t * std::exp(Complex(-0.5 * p.sigma_t * p.sigma_t * tau * tau, -tau * p.t0));
    for (int a = 0; a < 2; ++a)
        v *= s2pi * p.sigma_x * std::exp(Complex(-0.5 * p.sigma_x * p.sigma_x * xi[a] * xi[a], -xi[a] * p.center[a]));
    return v;
}

inline CriterionResult fourier_slice(const AcceptanceOptions& o) {
    CriterionResult r = started(1, "fourier-slice", "spectral xray geometry");
    const auto p = default_bump_params();
    const auto f = gaussian_bump(p);
    const auto body = default_body();
    std::vector<double> err(20);
    parallel_for(err.size(), [&](std::size_t i) {
        auto [w, xi] = pipeline_detail::random_pair<2>(o.seed, i, 4.0);
        Complex lhs = slice_from_sinogram(f, w, xi, body);
        Complex rhs = gaussian_fhat(p, -w.dot(xi), xi);
        err[i] = std::abs(lhs - rhs) / (1.0 + std::abs(rhs));
    });
    for (double e : err) r.measured = std::max(r.measured, e);
    r.tolerance = 1e-6 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = r.measured <= r.tolerance;
    r.detail = "pairs=20 |xi|<=4 closed-form oracle";
    r.time_limit = 30;
    return r;
}

inline CriterionResult region_decomposition(const AcceptanceOptions& o) {
    CriterionResult r = started(2, "region-decomposition", "spectral");
    const auto l = FrequencyLattice<2>::dual_of(default_grid());
    // dtau/dxi is rational on a DFT-dual lattice: compare in integers.
    const double ratio = l.dtau / l.dxi;
    long long q = 1;
    while (q < 100000 && std::abs(ratio * q - std::round(ratio * q)) > 1e-9) ++q;
    const long long pnum = std::llround(ratio * q);
    long long mismatches = 0;
    const std::size_t xs = l.xi_size();
    for (std::size_t flat = 0; flat < l.size(); ++flat) {
        long long it = static_cast<long long>(flat / xs) - l.ntau / 2;
        std::size_t k = flat % xs;
        long long k1 = static_cast<long long>(k % static_cast<std::size_t>(l.nxi)) - l.nxi / 2;
        long long k2 = static_cast<long long>(k / static_cast<std::size_t>(l.nxi)) - l.nxi / 2;
        bool visible = pnum * pnum * it * it <= q * q * (k1 * k1 + k2 * k2);
        if (visible != (classify_region(l.point(flat)) == Region::Visible)) ++mismatches;
    }
    double dir_err = 0.0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        FrequencyPoint<2> pt;
        pt.xi << 8.0 * hashed_uniform(o.seed, 7, i, 0), 8.0 * hashed_uniform(o.seed, 7, i, 1);
        pt.tau = pt.xi.norm() * hashed_uniform(o.seed, 7, i, 2);
        if (pt.xi.squaredNorm() == 0.0) continue;
        Vec<2> w = visible_direction(pt);
        dir_err = std::max({dir_err, std::abs(w.dot(pt.xi) + pt.tau), std::abs(w.norm() - 1.0)});
    }
    r.measured = dir_err;
    r.tolerance = 1e-12 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = mismatches == 0 && dir_err <= r.tolerance;
    r.detail = "lattice=64^3 mismatches=" + std::to_string(mismatches) + " direction_samples=10000";
    return r;
}

/// sup of the line-family data over 16 directions.
inline double line_data_sup(const SpaceTimeField<2>& f, const ConvexBody<2>& body) {
    std::vector<double> s(16);
    parallel_for(s.size(), [&](std::size_t i) {
        double th = kPi * static_cast<double>(i) / 16.0;
        s[i] = line_data(f, Vec<2>(std::cos(th), std::sin(th)), body).sup_norm();
    });
    double m = 0.0;
    for (double v : s) m = std::max(m, v);
    return m;
}

/// max over hidden lattice points (tau != 0) of |f^| / (exp(|tau|/3) |tau|^{-1/3} delta^{2/3}).
inline double hidden_ratio(const GaussianBumpParams<2>& p, const ConvexBody<2>& body) {
    const auto f = gaussian_bump(p);
    const auto g = default_grid();
    const auto s = fourier_from_samples(sample(f, g), g, FrequencyLattice<2>::dual_of(g));
    const double delta = line_data_sup(f, body);
    double m = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        FrequencyPoint<2> pt = s.lattice.point(i);
        if (s.region[i] != Region::Hidden || pt.tau == 0.0) continue;
        m = std::max(m, std::abs(s.values[i]) / hidden_bound(pt.tau, delta, 1.0));
    }
    return m;
}

inline CriterionResult hidden_envelope(const AcceptanceOptions& o) {
    CriterionResult r = started(3, "hidden-envelope", "spectral");
    const auto body = default_body();
    GaussianBumpParams<2> cal;
    cal.sigma_t = 1.8;
    cal.sigma_x = 0.6;
    const double C = hidden_ratio(cal, body);
    GaussianBumpParams<2> t1 = default_bump_params(), t2;
    t2.t0 = 12.0;
    t2.sigma_t = 1.2;
    t2.sigma_x = 0.45;
    t2.center << -0.3, 0.4;
    const double a = hidden_ratio(t1, body) / C, b = hidden_ratio(t2, body) / C;
    r.measured = std::max(a, b);
    r.tolerance = 1.0 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = r.measured <= r.tolerance;
    r.detail = "C=" + fmt(C) + " test_ratios=" + fmt(a) + ";" + fmt(b);
    return r;
}

inline CriterionResult tail_bound_check(const AcceptanceOptions& o) {
    CriterionResult r = started(4, "tail-bound", "reconstruct");
    SpaceTimeGrid<2> g;
    g.dt = 0.18;
    g.nt = 144;
    g.dx = 0.18;
    g.nx = 90;
    g.x_lo = Vec<2>::Constant(-8.1);
    const auto s = fourier_from_samples(sample(gaussian_bump(default_bump_params()), g), g, FrequencyLattice<2>::dual_of(g));
    const int n = 2;
    const double a = n + 2;
    const double C = tail_integral(s, 4.0) / std::pow(4.0, n + 1 - a);
    std::string detail = "lattice_radius=" + fmt(s.lattice.inscribed_radius()) + " C=" + fmt(C);
    for (double R : {8.0, 16.0}) {
        double ratio = tail_integral(s, R) / tail_bound(R, a, n, C);
        r.measured = std::max(r.measured, ratio);
        detail += " ratio(" + fmt(R) + ")=" + fmt(ratio);
    }
    r.tolerance = 1.0 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = r.measured <= r.tolerance;
    r.detail = detail;
    return r;
}

inline std::vector<double> default_noise_levels() { return {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9}; }

inline CriterionResult log_stability(const AcceptanceOptions& o) {
    CriterionResult r = started(5, "log-stability", "reconstruct");
    auto c = stability_curve(gaussian_bump(default_bump_params()), default_grid(), default_body(), default_noise_levels(), 0.5,
                             o.seed);
    r.measured = c.r_squared;
    r.tolerance = 1.0 - 0.1 * o.tolerance_scale;
    r.relation = ">=";
    r.pass = c.r_squared >= r.tolerance && c.dominated && c.fitted_rows == 7;
    r.detail = "C_fit=" + fmt(c.C_fit) + " C_envelope=" + fmt(c.C_envelope) + " dominated=" + std::to_string(c.dominated) +
               " rows=" + std::to_string(c.fitted_rows);
    r.time_limit = 300;
    return r;
}

inline CriterionResult parseval(const AcceptanceOptions& o) {
    CriterionResult r = started(6, "parseval-split", "reconstruct");
    const auto g = default_grid();
    const auto samples = sample(gaussian_bump(default_bump_params()), g);
    std::string detail;
    for (double R : {2.0, 3.0, 4.0}) {
        auto ps = parseval_split(samples, g, R);
        r.measured = std::max(r.measured, ps.relative_gap);
        detail += (detail.empty() ? "" : " ") + std::string("gap(R=") + fmt(R) + ")=" + fmt(ps.relative_gap);
    }
    r.tolerance = 1e-6 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = r.measured <= r.tolerance;
    r.detail = detail;
    return r;
}

inline BoundaryRay<2> beam_ray() {
    BoundaryRay<2> ray;
    ray.x << -1.0, 0.0;
    ray.omega << 1.0, 0.0;
    ray.normal << -1.0, 0.0;
    return ray;
}

inline BeamParams beam_params() {
    BeamParams p;
    p.duration = 1.5;
    return p;
}

inline CriterionResult beam_residual(const AcceptanceOptions& o) {
    CriterionResult r = started(7, "beam-residual", "beams");
    const std::vector<double> lambdas{16, 32, 64, 128, 256};
    auto unit = build_beam(make_factor<2>(UnitFactor<2>{}, 0.5, 1.0, 5.0), beam_ray(), 0.0, beam_params());
    GaussianFactor<2> gf;
    gf.amplitude = 0.05;
    gf.center << 0.0, 0.15;
    gf.width = 0.5;
    auto pert = build_beam(make_factor<2>(gf, 0.5, 1.0, 5.0), beam_ray(), 0.0, beam_params());
    auto a = residual_scaling(unit, lambdas), b = residual_scaling(pert, lambdas);
    r.measured = std::max(a.slope, b.slope);
    r.tolerance = 0.5 + 0.25 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = r.measured <= r.tolerance;
    r.detail = "slope_unit=" + fmt(a.slope) + " slope_gaussian=" + fmt(b.slope) + " quadratic_only=" + fmt(a.slope_quadratic) +
               ";" + fmt(b.slope_quadratic);
    r.time_limit = 120;
    return r;
}

inline CriterionResult beam_geometry(const AcceptanceOptions& o) {
    CriterionResult r = started(8, "beam-geometry", "beams");
    const auto ray = beam_ray();
    auto b = build_beam(make_factor<2>(UnitFactor<2>{}, 0.5, 1.0, 5.0), ray, 0.0, beam_params());
    double dev = 0.0;
    for (std::size_t k = 0; k < b.times.size(); ++k)
        dev = std::max(dev, (b.states[k].x - (ray.x + (b.times[k] - b.t0) * ray.omega)).norm());
    double worst = 1e300;
    const std::size_t nodes = b.times.size();
    for (std::uint64_t q = 0; q < 1000; ++q) {
        std::size_t k = static_cast<std::size_t>((0.5 + 0.5 * hashed_uniform(o.seed, 8, q, 0)) * static_cast<double>(nodes - 1));
        const auto& s = b.states[k];
        Vec<2> y(0.5 * hashed_uniform(o.seed, 8, q, 1), 0.5 * hashed_uniform(o.seed, 8, q, 2));
        const CVec<2> yc = y.cast<Complex>();
        Complex psi = s.D.value();
        for (int i = 0; i < 2; ++i) psi += s.D.coeff(beam_detail::unit<2>(i)) * y[i];
        psi += 0.5 * (yc.transpose() * b.hessian(k) * yc)(0, 0);
        const double bound = 0.5 * b.min_eig_im(k) * y.squaredNorm();
        worst = std::min(worst, (psi.imag() - bound) / std::max(y.squaredNorm(), 1e-300));
    }
    r.measured = dev;
    r.tolerance = 1e-8 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = dev <= r.tolerance && worst >= -1e-12;
    r.detail = "min_(Im_psi-C|y|^2)/|y|^2=" + fmt(worst) + " probes=1000";
    return r;
}

inline CriterionResult concentration(const AcceptanceOptions& o) {
    CriterionResult r = started(9, "concentration", "beams");
    const auto p = beam_params();
    auto b = build_beam(make_factor<2>(UnitFactor<2>{}, 0.5, 1.0, 5.0), beam_ray(), 0.0, p);
    auto h = [](double, const Vec<2>& x) { return std::exp(-x.squaredNorm()) * (1 + 0.5 * x[0]); };
    const std::vector<double> lambdas{32, 64, 128, 256, 512};
    auto rows = gaussian_concentration(h, b, CMat<2>(CMat<2>::Identity()), p, 0.7, lambdas);
    std::vector<double> err;
    for (const auto& row : rows) err.push_back(row.error);
    r.measured = fit_slope(lambdas, err);
    r.tolerance = p.sigma - 0.5 + 0.1 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = r.measured <= r.tolerance;
    r.detail = "sigma=" + fmt(p.sigma) + " err(32)=" + fmt(err.front()) + " err(512)=" + fmt(err.back());
    return r;
}

inline CriterionResult key_identity(const AcceptanceOptions& o) {
    CriterionResult r = started(10, "key-identity", "wavesim");
    const ScalarFactor c = scalar_factor(interior_bump(0.05));
    std::vector<double> gaps;
    for (int N : {24, 48, 96}) gaps.push_back(key_identity_check(c, WaveGrid::with_cfl(N, 2.0), identity_f1(), identity_f2()).gap);
    const double r1 = gaps[0] / gaps[1], r2 = gaps[1] / gaps[2];
    r.measured = std::max(std::abs(r1 - 4.0), std::abs(r2 - 4.0));
    r.tolerance = 1.0 * o.tolerance_scale;
    r.relation = "|ratio-4|<=";
    const double finest_tol = 0.02 * o.tolerance_scale;
    r.pass = r.measured <= r.tolerance && gaps[2] < finest_tol;
    r.detail = "gaps=" + fmt(gaps[0]) + ";" + fmt(gaps[1]) + ";" + fmt(gaps[2]) + " ratios=" + fmt(r1) + ";" + fmt(r2) +
               " finest_gap_tol=" + fmt(finest_tol);
    return r;
}

inline CriterionResult conformal_stability(const AcceptanceOptions& o) {
    CriterionResult r = started(11, "conformal-stability", "wavesim");
    auto cur = conformal_stability_experiment({0.01, 0.02, 0.04, 0.08}, WaveGrid::with_cfl(96, 2.0), 6, false);
    std::string norms;
    for (const auto& row : cur.rows) {
        r.measured = std::max(r.measured, std::isfinite(row.envelope) ? row.defect_l2 / row.envelope : 1e300);
        norms += (norms.empty() ? "" : ";") + fmt(row.dtn_norm);
    }
    r.tolerance = 1.0 * o.tolerance_scale;
    r.relation = "<=";
    r.pass = r.measured <= r.tolerance * (1.0 + 1e-12) && cur.monotone;
    r.detail = "C=" + fmt(cur.C) + " dtn_norms=" + norms + " monotone=" + std::to_string(cur.monotone);
    r.time_limit = 600;
    return r;
}

/// Small configurations of every pipeline used by the determinism check.
inline std::vector<std::pair<std::string, std::string>> determinism_runs() {
    return {
        {"forward", "rays.boundary = 8\nrays.directions = 3\nnoise.level = 1e-3\n"},
        {"slice-check", "slice.count = 4\ngrid.nt = 32\ngrid.dt = 0.8\ngrid.nx = 32\ngrid.dx = 0.5\n"},
        {"reconstruct", "grid.nt = 32\ngrid.dt = 0.8\ngrid.nx = 32\ngrid.dx = 0.5\nrecon.R = 2\nrecon.t_index = 16\n"},
        {"stability-curve", "grid.nt = 32\ngrid.dt = 0.8\ngrid.nx = 32\ngrid.dx = 0.5\nnoise.levels = 1e-3,1e-6,1e-9\n"},
        {"beam", "residual.lambdas = 16,32,64,128\nresidual.per_axis = 5\nresidual.times = 2\nfactor.kind = gaussian\n"},
        {"dtn", "grid.h = 0.0625\ngrid.k = 0.03125\nprobes.count = 2\nfamily.scales = 0.04,0.08\n"},
        {"identity-check", "grid.h = 0.083333333333333329\ngrid.k = 0.041666666666666664\nidentity.levels = 2\n"},
    };
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline CriterionResult determinism(const AcceptanceOptions& o) {
    CriterionResult r = started(12, "determinism", "harness");
    const auto root = o.scratch.empty()
                          ? std::filesystem::temp_directory_path() / ("tdxray-determinism-" + std::to_string(::getpid()))
                          : o.scratch;
    std::filesystem::remove_all(root);
    const unsigned saved = detail::thread_override().load();
    const std::vector<std::pair<std::string, unsigned>> passes{{"a", 1u}, {"b", 4u}, {"c", 4u}};
    long long compared = 0, mismatched = 0;
    std::ostringstream sink;
    try {
        for (const auto& [sub, text] : determinism_runs()) {
            const Config cfg = Config::parse(text, schema_for(sub), sub);
            std::vector<std::filesystem::path> dirs;
            for (const auto& [tag, cap] : passes) {
                set_thread_cap(cap);
                dirs.push_back(run_pipeline(sub, cfg, o.seed, root / tag, sink).dir);
            }
            std::set<std::string> names;
            for (const auto& d : dirs)
                for (const auto& e : std::filesystem::directory_iterator(d))
                    if (e.path().extension() == ".csv") names.insert(e.path().filename().string());
            for (const auto& n : names) {
                ++compared;
                const std::string ref = std::filesystem::exists(dirs[0] / n) ? slurp(dirs[0] / n) : std::string("\x01missing");
                for (std::size_t i = 1; i < dirs.size(); ++i)
                    if (!std::filesystem::exists(dirs[i] / n) || slurp(dirs[i] / n) != ref) {
                        ++mismatched;
                        break;
                    }
            }
        }
    } catch (...) {
        set_thread_cap(saved);
        std::filesystem::remove_all(root);
        throw;
    }
    set_thread_cap(saved);
    std::filesystem::remove_all(root);
    r.measured = static_cast<double>(mismatched);
    r.tolerance = 0.0;
    r.relation = "<=";
    r.pass = mismatched == 0 && compared > 0;
    r.detail = "csv_files=" + std::to_string(compared) + " thread_caps=1;4;4";
    return r;
}

struct Entry {
    int id;
    std::string modules;
    std::function<CriterionResult(const AcceptanceOptions&)> run;
};

inline const std::vector<Entry>& registry() {
    static const std::vector<Entry> e{
        {1, "spectral xray geometry", fourier_slice},
        {2, "spectral", region_decomposition},
        {3, "spectral", hidden_envelope},
        {4, "reconstruct", tail_bound_check},
        {5, "reconstruct", log_stability},
        {6, "reconstruct", parseval},
        {7, "beams", beam_residual},
        {8, "beams", beam_geometry},
        {9, "beams", concentration},
        {10, "wavesim", key_identity},
        {11, "wavesim", conformal_stability},
        {12, "harness", determinism},
    };
    return e;
}

inline bool has_module(const std::string& list, const std::string& m) {
    std::istringstream in(list);
    std::string w;
    while (in >> w)
        if (w == m) return true;
    return false;
}

}  // namespace acceptance_detail

/// One line per criterion: PASS/FAIL, id, name, measured vs tolerance, runtime, detail.
inline std::string format_result(const CriterionResult& r) {
    using acceptance_detail::fmt;
    std::string s = std::string(r.pass ? "PASS" : "FAIL") + "  " + (r.id < 10 ? " " : "") + std::to_string(r.id) + "  " +
                    r.name + "  measured=" + fmt(r.measured) + " " + r.relation + " " + fmt(r.tolerance) + "  time=" +
                    fmt(r.seconds) + "s";
    if (r.time_limit > 0) s += " (limit " + fmt(r.time_limit) + "s)";
    if (!r.detail.empty()) s += "  " + r.detail;
    return s;
}

/// Runs the criteria selected by `only` in id order; `on_result` sees each row as it completes.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& o,
                                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
    using namespace acceptance_detail;
    if (!(o.tolerance_scale > 0.0)) throw Error(ErrorKind::ConfigInvalid, "harness/acceptance", "tolerance scale must be positive");
    if (!o.only.empty()) {
        bool known = false;
        for (const auto& m : module_names()) known = known || m == o.only;
        if (!known) throw Error(ErrorKind::ConfigInvalid, "harness/acceptance", "unknown module '" + o.only + "'");
    }
    std::vector<CriterionResult> out;
    for (const auto& e : registry()) {
        if (!o.only.empty() && !has_module(e.modules, o.only)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = e.run(o);
        } catch (const Error& err) {
            r.id = e.id;
            r.modules = e.modules;
            r.name = "criterion-" + std::to_string(e.id);
            r.measured = std::numeric_limits<double>::quiet_NaN();
            r.relation = "error";
            r.pass = false;
            r.detail = error_record(err);
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.time_limit > 0 && r.seconds > r.time_limit) r.pass = false;
        if (on_result) on_result(r);
        out.push_back(r);
    }
    return out;
}

/// acceptance.csv: wall-clock is left out so the file is reproducible.
inline CsvWriter acceptance_table(const std::vector<CriterionResult>& rows) {
    CsvWriter w({"id", "name", "modules", "measured", "relation", "tolerance", "pass", "detail"});
    for (const auto& r : rows) {
        std::string detail = r.detail;
        for (char& ch : detail)
            if (ch == ',' || ch == '"') ch = ';';
        w.row({r.id, r.name, r.modules, r.measured, r.relation, r.tolerance, r.pass, detail});
    }
    return w;
}

}  // namespace tdxray::harness
