#pragma once

// Subcommand pipelines: build module inputs from a validated config, run the
// module operations, write CSV files into the run directory.

#include "tdxray/beams.hpp"
#include "tdxray/conformal.hpp"
#include "tdxray/fields.hpp"
#include "tdxray/geometry.hpp"
#include "tdxray/harness/config.hpp"
#include "tdxray/harness/csv.hpp"
#include "tdxray/harness/manifest.hpp"
#include "tdxray/reconstruct.hpp"
#include "tdxray/spectral.hpp"
#include "tdxray/wavesim.hpp"
#include "tdxray/xray.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace tdxray::harness {

struct RunContext {
    std::filesystem::path dir;
    RunManifest& manifest;
    std::ostream& log;
    std::uint64_t seed = 0;

    void emit(const std::string& name, const CsvWriter& w) {
        w.write((dir / name).string());
        manifest.outputs.push_back(name);
    }
};

namespace pipeline_detail {

inline Error invalid(const std::string& msg) { return Error(ErrorKind::ConfigInvalid, "harness/config", msg); }

template <int Dim>
Vec<Dim> vec_from(const Config& c, const std::string& key) {
    auto v = c.get_list(key);
    if (static_cast<int>(v.size()) != Dim)
        throw invalid("key '" + key + "' needs " + std::to_string(Dim) + " entries, got " + std::to_string(v.size()));
    Vec<Dim> out;
    for (int i = 0; i < Dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
    return out;
}

/// Calls fn(std::integral_constant<int, d>) for d in {2, 3}.
template <class Fn>
void with_dim(long long d, const std::string& key, Fn&& fn) {
    if (d == 2) fn(std::integral_constant<int, 2>{});
    else if (d == 3) fn(std::integral_constant<int, 3>{});
    else throw invalid("key '" + key + "' must be 2 or 3");
}

template <int Dim>
ConvexBody<Dim> body_from(const Config& c) {
    auto axes = c.get_list("body.semiaxes");
    for (double a : axes)
        if (!(a > 0.0)) throw invalid("body.semiaxes must be positive");
    if (c.get_string("body.kind") == "ball") {
        if (axes.size() != 1) throw invalid("body.semiaxes for a ball is a single radius");
        return ConvexBody<Dim>::ball(Vec<Dim>::Zero(), axes[0]);
    }
    return ConvexBody<Dim>::ellipsoid(Vec<Dim>::Zero(), vec_from<Dim>(c, "body.semiaxes"));
}

template <int Dim>
SpaceTimeField<Dim> field_from(const Config& c) {
    if (c.get_string("field.kind") == "zero") return zero_field<Dim>(2 * c.get_double("field.t0"), 1.0);
    GaussianBumpParams<Dim> p;
    p.amplitude = c.get_double("field.amplitude");
    p.t0 = c.get_double("field.t0");
    p.sigma_t = c.get_double("field.sigma_t");
    p.sigma_x = c.get_double("field.sigma_x");
    if (!(p.sigma_t > 0.0 && p.sigma_x > 0.0)) throw invalid("field widths must be positive");
    p.center = vec_from<Dim>(c, "field.center");
    return gaussian_bump(p);
}

template <int Dim>
SpaceTimeGrid<Dim> grid_from(const Config& c) {
    SpaceTimeGrid<Dim> g;
    g.t0 = c.get_double("grid.t0");
    g.dt = c.get_double("grid.dt");
    g.nt = static_cast<int>(c.get_int("grid.nt"));
    g.x_lo = Vec<Dim>::Constant(c.get_double("grid.x_lo"));
    g.dx = c.get_double("grid.dx");
    g.nx = static_cast<int>(c.get_int("grid.nx"));
    if (!(g.dt > 0.0 && g.dx > 0.0)) throw invalid("grid spacings must be positive");
    if (g.nt < 4 || g.nx < 4 || g.nt % 2 || g.nx % 2) throw invalid("grid.nt and grid.nx must be even and >= 4");
    return g;
}

inline WaveGrid wave_grid_from(const Config& c) {
    const double h = c.get_double("grid.h");
    if (!(h > 0.0 && h <= 0.25)) throw invalid("grid.h must lie in (0, 1/4]");
    const long long N = std::llround(1.0 / h);
    if (std::abs(N * h - 1.0) > 1e-9) throw invalid("1/grid.h must be an integer");
    WaveGrid g;
    g.N = static_cast<int>(N);
    g.k = c.get_double("grid.k");
    g.T = c.get_double("grid.T");
    g.n_exp = static_cast<int>(c.get_int("grid.n_exp"));
    if (!(g.k > 0.0 && g.T > 0.0 && g.k <= g.T)) throw invalid("grid.k and grid.T must be positive with k <= T");
    if (g.n_exp < 1) throw invalid("grid.n_exp must be >= 1");
    return g;
}

template <int Dim>
std::vector<std::string> axis_names(const std::string& stem) {
    std::vector<std::string> out;
    for (int i = 1; i <= Dim; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

inline std::vector<std::string> concat(std::vector<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (auto& p : parts)
        for (auto& s : p) out.push_back(std::move(s));
    return out;
}

template <int Dim>
void push_vec(std::vector<Cell>& row, const Vec<Dim>& v) {
    for (int i = 0; i < Dim; ++i) row.emplace_back(v[i]);
}

/// Deterministic pseudo-random direction and frequency for pair i.
template <int Dim>
std::pair<Vec<Dim>, Vec<Dim>> random_pair(std::uint64_t seed, std::uint64_t i, double xi_max) {
    Vec<Dim> w, xi;
    if constexpr (Dim == 2) {
        double th = kPi * hashed_uniform(seed, i, 0);
        w << std::cos(th), std::sin(th);
    } else {
        double z = hashed_uniform(seed, i, 0), ph = kPi * hashed_uniform(seed, i, 1);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        w << r * std::cos(ph), r * std::sin(ph), z;
    }
    for (int a = 0; a < Dim; ++a) xi[a] = xi_max * hashed_uniform(seed, i, 2 + static_cast<std::uint64_t>(a)) / std::sqrt(double(Dim));
    return {w, xi};
}

}  // namespace pipeline_detail

inline void run_forward(const Config& c, RunContext& ctx) {
    using namespace pipeline_detail;
    ctx.manifest.tolerance("quadrature_tol", kQuadTol);
    ctx.manifest.tolerance("grazing_tol", kGrazingTol);
    ctx.manifest.tolerance("boundary_tol", kBoundaryTol);
    with_dim(c.get_int("body.dim"), "body.dim", [&](auto d) {
        constexpr int Dim = decltype(d)::value;
        const auto body = body_from<Dim>(c);
        const auto f = field_from<Dim>(c);
        MetricSpec<Dim> metric = MetricSpec<Dim>::euclidean();
        if (c.get_string("metric.kind") == "bump") {
            BumpFactor<Dim> b;
            b.strength = c.get_double("metric.strength");
            b.radius = c.get_double("metric.radius");
            metric = MetricSpec<Dim>::conformal(b);
        }
        const double noise = c.get_double("noise.level");
        if (noise < 0.0) throw invalid("noise.level must be >= 0");
        auto rays = sample_inward_bundle(body, static_cast<int>(c.get_int("rays.boundary")),
                                         static_cast<int>(c.get_int("rays.directions")));
        auto sino = ctx.manifest.stage("sinogram", [&] { return sinogram(f, rays, metric, body, c.get_double("rays.dt")); });
        if (noise > 0.0) sino = perturb_sinogram(sino, noise, ctx.seed);
        CsvWriter w(concat({axis_names<Dim>("x"), axis_names<Dim>("omega"), {"tau", "value"}}));
        for (std::size_t i = 0; i < sino.rays.size(); ++i) {
            std::vector<Cell> row;
            push_vec<Dim>(row, sino.rays[i].x);
            push_vec<Dim>(row, sino.rays[i].omega);
            row.emplace_back(sino.taus[i]);
            row.emplace_back(sino.values[i]);
            w.row(row);
        }
        ctx.emit("sinogram.csv", w);
        ctx.log << "rays=" << sino.rays.size() << " sup_norm=" << Cell::format(sino.sup_norm) << "\n";
    });
}

inline void run_slice_check(const Config& c, RunContext& ctx) {
    using namespace pipeline_detail;
    ctx.manifest.tolerance("max_relative_error", 1e-6);
    with_dim(c.get_int("body.dim"), "body.dim", [&](auto d) {
        constexpr int Dim = decltype(d)::value;
        const auto body = body_from<Dim>(c);
        const auto f = field_from<Dim>(c);
        const auto g = grid_from<Dim>(c);
        const int count = static_cast<int>(c.get_int("slice.count"));
        const double xi_max = c.get_double("slice.xi_max"), spacing = c.get_double("line.spacing");
        if (count < 1) throw invalid("slice.count must be >= 1");
        const auto samples = ctx.manifest.stage("sample", [&] { return sample(f, g); });
        std::vector<Complex> lhs(static_cast<std::size_t>(count)), rhs(static_cast<std::size_t>(count));
        std::vector<std::pair<Vec<Dim>, Vec<Dim>>> pairs;
        for (int i = 0; i < count; ++i) pairs.push_back(random_pair<Dim>(ctx.seed, static_cast<std::uint64_t>(i), xi_max));
        ctx.manifest.stage("slices", [&] {
            parallel_for(pairs.size(), [&](std::size_t i) {
                const auto& [w, xi] = pairs[i];
                lhs[i] = slice_from_sinogram(f, w, xi, body, spacing);
                rhs[i] = fourier_at(samples, g, FrequencyPoint<Dim>{-w.dot(xi), xi});
            });
        });
        CsvWriter out(concat({axis_names<Dim>("omega"), axis_names<Dim>("xi"),
                              {"tau", "slice_re", "slice_im", "fhat_re", "fhat_im", "rel_error"}}));
        double worst = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double err = std::abs(lhs[i] - rhs[i]) / (1.0 + std::abs(rhs[i]));
            worst = std::max(worst, err);
            std::vector<Cell> row;
            push_vec<Dim>(row, pairs[i].first);
            push_vec<Dim>(row, pairs[i].second);
            for (double v : {-pairs[i].first.dot(pairs[i].second), lhs[i].real(), lhs[i].imag(), rhs[i].real(), rhs[i].imag(), err})
                row.emplace_back(v);
            out.row(row);
        }
        ctx.emit("slice_check.csv", out);
        ctx.log << "max_relative_error=" << Cell::format(worst) << "\n";
    });
}

inline void run_reconstruct(const Config& c, RunContext& ctx) {
    using namespace pipeline_detail;
    with_dim(c.get_int("body.dim"), "body.dim", [&](auto d) {
        constexpr int Dim = decltype(d)::value;
        const auto body = body_from<Dim>(c);
        const auto f = field_from<Dim>(c);
        const auto g = grid_from<Dim>(c);
        const double delta = c.get_double("noise.delta"), eps = c.get_double("recon.epsilon");
        const int t_index = static_cast<int>(c.get_int("recon.t_index"));
        if (delta < 0.0) throw invalid("noise.delta must be >= 0");
        if (t_index < 0 || t_index >= g.nt) throw invalid("recon.t_index outside the grid");
        ReconstructionPlan plan;
        if (c.get_double("recon.R") > 0.0) {
            plan.R = c.get_double("recon.R");
            plan.a = Dim + 2;
            plan.epsilon = eps;
            plan.delta = delta;
        } else {
            plan = make_plan(delta, eps, Dim);
        }
        ctx.manifest.tolerance("R", plan.R);
        const auto lattice = FrequencyLattice<Dim>::dual_of(g);
        auto vs = ctx.manifest.stage("visible_spectrum",
                                     [&] { return visible_spectrum(f, lattice, plan.R, body, ctx.seed, c.get_double("line.spacing")); });
        auto rec = ctx.manifest.stage("inversion", [&] { return truncated_inversion(vs.field(delta, plan.R), plan, g); });
        const auto truth = sample(f, g);
        auto [l2, c0] = field_errors(truth, rec.samples, g);
        CsvWriter s({"delta", "R", "conflict", "l2_error", "c0_error", "imag_residual", "visible_points", "data_sup"});
        s.row({delta, plan.R, plan.conflict, l2, c0, rec.imag_residual, vs.index.size(), vs.data_sup});
        ctx.emit("summary.csv", s);
        CsvWriter fw(concat({{"t"}, axis_names<Dim>("x"), {"truth", "reconstruction"}}));
        const std::size_t ns = g.spatial_size(), base = static_cast<std::size_t>(t_index) * ns;
        for (std::size_t k = 0; k < ns; ++k) {
            std::vector<Cell> row{g.t(t_index)};
            push_vec<Dim>(row, g.point(k));
            row.emplace_back(truth[base + k]);
            row.emplace_back(rec.samples[base + k]);
            fw.row(row);
        }
        ctx.emit("field.csv", fw);
        ctx.log << "R=" << Cell::format(plan.R) << " l2_error=" << Cell::format(l2) << " c0_error=" << Cell::format(c0) << "\n";
    });
}

inline void run_stability_curve(const Config& c, RunContext& ctx) {
    using namespace pipeline_detail;
    with_dim(c.get_int("body.dim"), "body.dim", [&](auto d) {
        constexpr int Dim = decltype(d)::value;
        const auto body = body_from<Dim>(c);
        const auto f = field_from<Dim>(c);
        const auto g = grid_from<Dim>(c);
        ctx.manifest.tolerance("epsilon", c.get_double("recon.epsilon"));
        auto curve = ctx.manifest.stage("stability_curve", [&] {
            return stability_curve(f, g, body, c.get_list("noise.levels"), c.get_double("recon.epsilon"), ctx.seed,
                                   c.get_double("line.spacing"));
        });
        CsvWriter w({"delta", "R", "l2_error", "c0_error", "envelope", "feasible"});
        for (const auto& r : curve.rows) w.row({r.delta, r.R, r.l2_error, r.c0_error, r.envelope, r.feasible});
        ctx.emit("stability_curve.csv", w);
        CsvWriter fit({"C_fit", "r_squared", "C_envelope", "fitted_rows", "dominated"});
        fit.row({curve.C_fit, curve.r_squared, curve.C_envelope, curve.fitted_rows, curve.dominated});
        ctx.emit("fit.csv", fit);
        ctx.log << "C_fit=" << Cell::format(curve.C_fit) << " r_squared=" << Cell::format(curve.r_squared)
                << " C_envelope=" << Cell::format(curve.C_envelope) << " dominated=" << curve.dominated << "\n";
    });
}

namespace pipeline_detail {

/// Calls fn(ConformalFactor) for the configured factor kind.
template <int Dim, class Fn>
void with_factor(const Config& c, double T, Fn&& fn) {
    const double m0 = c.get_double("factor.m0"), eps = c.get_double("factor.eps");
    const std::string kind = c.get_string("factor.kind");
    if (kind == "unit") {
        fn(make_factor<Dim>(UnitFactor<Dim>{}, m0, eps, T));
    } else if (kind == "gaussian") {
        GaussianFactor<Dim> g;
        g.amplitude = c.get_double("factor.amplitude");
        g.center = vec_from<Dim>(c, "factor.center");
        g.width = c.get_double("factor.width");
        fn(make_factor<Dim>(g, m0, eps, T));
    } else {
        BumpFactor<Dim> b;
        b.strength = c.get_double("factor.amplitude");
        b.center = vec_from<Dim>(c, "factor.center");
        b.radius = c.get_double("factor.width");
        fn(make_factor<Dim>(b, m0, eps, T));
    }
}

}  // namespace pipeline_detail

inline void run_beam(const Config& c, RunContext& ctx) {
    using namespace pipeline_detail;
    BeamParams p;
    p.lambda = c.get_double("beam.lambda");
    p.eps1 = c.get_double("beam.eps1");
    p.alpha = c.get_double("beam.alpha");
    p.sigma = c.get_double("beam.sigma");
    p.dt = c.get_double("beam.dt");
    p.duration = c.get_double("beam.duration");
    p.validate();
    const int stride = static_cast<int>(c.get_int("output.stride"));
    if (stride < 1) throw invalid("output.stride must be >= 1");
    ctx.manifest.tolerance("fd_halving_change", 0.05);
    ctx.manifest.tolerance("caustic_det_floor", 1e-12);
    with_dim(c.get_int("beam.dim"), "beam.dim", [&](auto d) {
        constexpr int Dim = decltype(d)::value;
        BoundaryRay<Dim> ray;
        ray.x = vec_from<Dim>(c, "beam.x0");
        ray.omega = vec_from<Dim>(c, "beam.omega");
        if (std::abs(ray.omega.norm() - 1.0) > 1e-9) throw invalid("beam.omega must be a unit vector");
        ray.normal = -ray.omega;
        const double t0 = c.get_double("beam.t0");
        with_factor<Dim>(c, t0 + p.duration, [&](const auto& cf) {
            auto beam = ctx.manifest.stage("build_beam", [&] { return build_beam(cf, ray, t0, p); });
            CsvWriter w(concat({{"t"}, axis_names<Dim>("xtilde"), axis_names<Dim>("omega"),
                                {"a0_re", "a0_im", "min_eig_ImM", "detY_re", "detY_im"}}));
            for (std::size_t k = 0; k < beam.times.size(); ++k) {
                if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != beam.times.size()) continue;
                const auto& s = beam.states[k];
                std::vector<Cell> row{beam.times[k]};
                push_vec<Dim>(row, s.x);
                push_vec<Dim>(row, Vec<Dim>(beam.velocities[k].normalized()));
                Complex det = s.Y.determinant();
                for (double v : {s.A0.real(), s.A0.imag(), beam.min_eig_im(k), det.real(), det.imag()}) row.emplace_back(v);
                w.row(row);
            }
            ctx.emit("beam.csv", w);
            ctx.log << "nodes=" << beam.times.size() << " psi_t0=" << Cell::format(beam.psi_t0) << "\n";
            if (!c.get_bool("residual.enabled")) return;
            auto rep = ctx.manifest.stage("residual_scaling", [&] {
                return residual_scaling(beam, c.get_list("residual.lambdas"), static_cast<int>(c.get_int("residual.times")),
                                        static_cast<int>(c.get_int("residual.per_axis")));
            });
            CsvWriter r({"lambda", "sup_corrected", "sup_quadratic"});
            for (std::size_t i = 0; i < rep.lambdas.size(); ++i) r.row({rep.lambdas[i], rep.sup_corrected[i], rep.sup_quadratic[i]});
            ctx.emit("residual.csv", r);
            CsvWriter fit({"slope", "slope_quadratic", "max_halving_change"});
            fit.row({rep.slope, rep.slope_quadratic, rep.max_halving_change});
            ctx.emit("residual_fit.csv", fit);
            ctx.log << "residual_slope=" << Cell::format(rep.slope) << " quadratic_slope=" << Cell::format(rep.slope_quadratic) << "\n";
        });
    });
}

inline void run_dtn(const Config& c, RunContext& ctx) {
    using namespace pipeline_detail;
    const WaveGrid g = wave_grid_from(c);
    const int count = static_cast<int>(c.get_int("probes.count"));
    if (count < 1) throw invalid("probes.count must be >= 1");
    auto scales = c.get_list("family.scales");
    ctx.manifest.tolerance("cfl_ratio", g.dt() * std::sqrt(2.0) / g.h());
    auto cur = ctx.manifest.stage("conformal_experiment",
                                  [&] { return conformal_stability_experiment(scales, g, count, c.get_bool("probes.saturation")); });
    CsvWriter w({"s", "defect_l2", "dtn_norm", "dtn_norm_2x", "envelope"});
    for (const auto& r : cur.rows) w.row({r.s, r.defect_l2, r.dtn_norm, r.dtn_norm_2x, r.envelope});
    ctx.emit("dtn.csv", w);
    CsvWriter fit({"C", "dominated", "monotone", "probes", "N", "k"});
    fit.row({cur.C, cur.dominated, cur.monotone, count, g.N, g.dt()});
    ctx.emit("dtn_fit.csv", fit);
    ctx.log << "C=" << Cell::format(cur.C) << " dominated=" << cur.dominated << " monotone=" << cur.monotone << "\n";
}

inline void run_identity_check(const Config& c, RunContext& ctx) {
    using namespace pipeline_detail;
    WaveGrid g = wave_grid_from(c);
    const int levels = static_cast<int>(c.get_int("identity.levels"));
    if (levels < 1 || levels > 4) throw invalid("identity.levels must lie in 1..4");
    const ScalarFactor cf = scalar_factor(interior_bump(c.get_double("identity.scale")));
    CsvWriter w({"N", "h", "k", "lhs", "rhs", "gap", "ratio"});
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int l = 0; l < levels; ++l, g = g.refined()) {
        auto r = ctx.manifest.stage("level" + std::to_string(l),
                                    [&] { return key_identity_check(cf, g, identity_f1(), identity_f2()); });
        w.row({g.N, g.h(), g.dt(), r.lhs, r.rhs, r.gap, prev / r.gap});
        ctx.log << "N=" << g.N << " gap=" << Cell::format(r.gap) << "\n";
        prev = r.gap;
    }
    ctx.emit("identity.csv", w);
}

}  // namespace tdxray::harness
