#include "tdxray/harness/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
    using namespace tdxray::harness;
    CLI::App app{"tdxray: time-dependent X-ray transform toolkit"};
    app.require_subcommand(1, 1);
    CliArgs args;
    std::string config;
    const std::map<std::string, std::string> help{
        {"forward", "sinogram of a field along boundary rays (Euclidean or conformal metric)"},
        {"slice-check", "line-data slices against the direct Fourier transform"},
        {"reconstruct", "truncated inversion from noisy line data at one noise level"},
        {"stability-curve", "reconstruction error over noise levels with a 1/log fit"},
        {"beam", "Gaussian beam along a ray and its residual scaling in lambda"},
        {"dtn", "DtN map differences for a family of conformal factors"},
        {"identity-check", "discrete DtN integral identity under grid refinement"},
        {"acceptance", "run the acceptance criteria"},
    };
    for (const auto& name : subcommands()) {
        auto* sub = app.add_subcommand(name, help.count(name) ? help.at(name) : "");
        sub->add_option("--config", config, "flat key = value configuration file");
        sub->add_option("--out", args.out, "output root directory")->capture_default_str();
        sub->add_option("--seed", args.seed, "seed of all pseudo-random choices")->capture_default_str();
        sub->add_option("--only", args.only, "acceptance: run only the criteria of one module");
    }
    CLI11_PARSE(app, argc, argv);
    args.subcommand = app.get_subcommands().front()->get_name();
    if (!config.empty()) args.config_path = config;
    return run_command(args, std::cout, std::cerr);
}
