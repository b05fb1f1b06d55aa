#pragma once

// Config schemas of the CLI subcommands.

#include "tdxray/harness/config.hpp"

#include <string>
#include <vector>

namespace tdxray::harness {

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"forward", "slice-check", "reconstruct", "stability-curve", "beam",
                                            "dtn",     "identity-check", "acceptance"};
    return s;
}

namespace schema_detail {

using K = KeyType;

inline void add(Schema& s, std::vector<KeySpec> keys) {
    for (auto& k : keys) s.keys.push_back(std::move(k));
}

inline std::vector<KeySpec> body_keys() {
    return {
        {"body.dim", K::Int, "2", "spatial dimension (2 or 3)", {}},
        {"body.kind", K::String, "ball", "ball or ellipsoid centered at the origin", {"ball", "ellipsoid"}},
        {"body.semiaxes", K::List, "5", "radius (ball) or one semi-axis per dimension", {}},
    };
}

inline std::vector<KeySpec> field_keys() {
    return {
        {"field.kind", K::String, "bump", "space-time Gaussian bump or the zero field", {"bump", "zero"}},
        {"field.amplitude", K::Double, "1", "bump amplitude", {}},
        {"field.t0", K::Double, "12.8", "bump center in time", {}},
        {"field.sigma_t", K::Double, "1.5", "bump width in time", {}},
        {"field.sigma_x", K::Double, "0.5", "bump width in space", {}},
        {"field.center", K::List, "0.1,-0.1", "bump center in space (one entry per dimension)", {}},
    };
}

inline std::vector<KeySpec> grid_keys() {
    return {
        {"grid.t0", K::Double, "0", "first sample time", {}},
        {"grid.dt", K::Double, "0.4", "time spacing", {}},
        {"grid.nt", K::Int, "64", "time samples", {}},
        {"grid.x_lo", K::Double, "-8", "first sample coordinate on every spatial axis", {}},
        {"grid.dx", K::Double, "0.25", "spatial spacing", {}},
        {"grid.nx", K::Int, "64", "samples per spatial axis", {}},
    };
}

inline std::vector<KeySpec> wave_grid_keys(const std::string& h, const std::string& k, const std::string& T) {
    return {
        {"grid.h", K::Double, h, "spatial step on the unit square (1/h must be an integer)", {}},
        {"grid.k", K::Double, k, "time step (adjusted down so that T/k is an integer)", {}},
        {"grid.T", K::Double, T, "time horizon", {}},
        {"grid.n_exp", K::Int, "2", "n in the exponents c^{n/2}, c^{n/2-1}", {}},
    };
}

}  // namespace schema_detail

/// Schema of a subcommand; ConfigInvalid for unknown subcommands.
inline Schema schema_for(const std::string& sub) {
    using namespace schema_detail;
    Schema s;
    s.subcommand = sub;
    if (sub == "forward") {
        add(s, body_keys());
        add(s, field_keys());
        add(s, {
                   {"metric.kind", K::String, "euclidean", "euclidean or conformal bump metric", {"euclidean", "bump"}},
                   {"metric.strength", K::Double, "0.05", "bump strength of c - 1", {}},
                   {"metric.radius", K::Double, "2", "bump radius (centered at the origin)", {}},
                   {"rays.boundary", K::Int, "16", "boundary points", {}},
                   {"rays.directions", K::Int, "5", "inward directions per boundary point", {}},
                   {"rays.dt", K::Double, "0.01", "geodesic integrator step", {}},
                   {"noise.level", K::Double, "0", "uniform noise amplitude added to the sinogram", {}},
               });
    } else if (sub == "slice-check") {
        add(s, body_keys());
        add(s, field_keys());
        add(s, grid_keys());
        add(s, {
                   {"slice.count", K::Int, "20", "random (omega, xi) pairs", {}},
                   {"slice.xi_max", K::Double, "4", "bound on |xi|", {}},
                   {"line.spacing", K::Double, "0.25", "start-point spacing of the line family", {}},
               });
    } else if (sub == "reconstruct") {
        add(s, body_keys());
        add(s, field_keys());
        add(s, grid_keys());
        add(s, {
                   {"noise.delta", K::Double, "1e-6", "noise amplitude on the line data", {}},
                   {"recon.epsilon", K::Double, "0.5", "epsilon of the R(delta) rule", {}},
                   {"recon.R", K::Double, "0", "truncation radius; 0 selects R from delta", {}},
                   {"recon.t_index", K::Int, "32", "time index of the exported field slice", {}},
                   {"line.spacing", K::Double, "0.25", "start-point spacing of the line family", {}},
               });
    } else if (sub == "stability-curve") {
        add(s, body_keys());
        add(s, field_keys());
        add(s, grid_keys());
        add(s, {
                   {"noise.levels", K::List, "1e-3,1e-4,1e-5,1e-6,1e-7,1e-8,1e-9", "strictly decreasing noise levels", {}},
                   {"recon.epsilon", K::Double, "0.5", "epsilon of the R(delta) rule", {}},
                   {"line.spacing", K::Double, "0.25", "start-point spacing of the line family", {}},
               });
    } else if (sub == "beam") {
        add(s, {
                   {"beam.dim", K::Int, "2", "spatial dimension (2 or 3)", {}},
                   {"beam.t0", K::Double, "0", "start time", {}},
                   {"beam.x0", K::List, "-1,0", "start point", {}},
                   {"beam.omega", K::List, "1,0", "unit start direction", {}},
                   {"beam.duration", K::Double, "1.5", "beam lifetime", {}},
                   {"beam.dt", K::Double, "2e-3", "integrator step", {}},
                   {"beam.lambda", K::Double, "64", "frequency parameter", {}},
                   {"beam.sigma", K::Double, "0.1", "concentration exponent sigma", {}},
                   {"beam.eps1", K::Double, "1e-2", "cutoff parameter eps1", {}},
                   {"beam.alpha", K::Double, "2", "cutoff exponent alpha", {}},
                   {"factor.kind", K::String, "unit", "conformal factor", {"unit", "gaussian", "bump"}},
                   {"factor.amplitude", K::Double, "0.05", "amplitude of c - 1", {}},
                   {"factor.center", K::List, "0,0.15", "center of the perturbation", {}},
                   {"factor.width", K::Double, "0.5", "Gaussian width or bump radius", {}},
                   {"factor.m0", K::Double, "0.5", "claimed lower bound on c", {}},
                   {"factor.eps", K::Double, "1", "claimed bound on |c - 1|_{C^1}", {}},
                   {"residual.enabled", K::Bool, "true", "run the residual scaling fit", {}},
                   {"residual.lambdas", K::List, "16,32,64,128,256", "lambdas of the residual fit", {}},
                   {"residual.times", K::Int, "5", "probe times", {}},
                   {"residual.per_axis", K::Int, "13", "probe points per axis", {}},
                   {"output.stride", K::Int, "10", "write every stride-th integrator node", {}},
               });
    } else if (sub == "dtn") {
        add(s, wave_grid_keys("0.020833333333333332", "0.010416666666666666", "2"));
        add(s, {
                   {"probes.count", K::Int, "6", "boundary probes", {}},
                   {"probes.saturation", K::Bool, "false", "also run twice the probes", {}},
                   {"family.scales", K::List, "0.01,0.02,0.04,0.08", "bump strengths s of c_s", {}},
               });
    } else if (sub == "identity-check") {
        add(s, wave_grid_keys("0.041666666666666664", "0.020833333333333332", "2"));
        add(s, {
                   {"identity.levels", K::Int, "3", "grids, each halving h and k", {}},
                   {"identity.scale", K::Double, "0.05", "bump strength s of c", {}},
               });
    } else if (sub == "acceptance") {
        add(s, {
                   {"acceptance.tolerance_scale", K::Double, "1", "multiplies every tolerance slack", {}},
               });
    } else {
        throw Error(ErrorKind::ConfigInvalid, "harness/schema", "unknown subcommand '" + sub + "'");
    }
    return s;
}

}  // namespace tdxray::harness
