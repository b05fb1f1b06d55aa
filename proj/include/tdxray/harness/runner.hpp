#pragma once

// Executes one pipeline subcommand into <out_root>/<subcommand>-<config hash>/.

#include "tdxray/harness/config.hpp"
#include "tdxray/harness/manifest.hpp"
#include "tdxray/harness/pipelines.hpp"
#include "tdxray/harness/schemas.hpp"

#include <filesystem>
#include <ostream>
#include <string>

namespace tdxray::harness {

/// Machine-readable error line: error kind=<Kind> where=<module/op> message="<text>".
inline std::string error_record(const Error& e) {
    std::string msg = e.message();
    for (char& ch : msg)
        if (ch == '"' || ch == '\n') ch = '\'';
    return std::string("error kind=") + to_string(e.kind()) + " where=" + e.where() + " message=\"" + msg + "\"";
}

struct RunResult {
    std::filesystem::path dir;
    std::string hash;
};

inline std::filesystem::path run_directory(const std::filesystem::path& out_root, const std::string& sub,
                                           const std::string& hash) {
    return out_root / (sub + "-" + hash);
}

/// Runs a non-acceptance subcommand. The manifest is written in every case; a
/// failing pipeline marks it status=error and rethrows.
inline RunResult run_pipeline(const std::string& sub, const Config& cfg, std::uint64_t seed,
                              const std::filesystem::path& out_root, std::ostream& log) {
    using Fn = void (*)(const Config&, RunContext&);
    Fn fn = nullptr;
    if (sub == "forward") fn = run_forward;
    else if (sub == "slice-check") fn = run_slice_check;
    else if (sub == "reconstruct") fn = run_reconstruct;
    else if (sub == "stability-curve") fn = run_stability_curve;
    else if (sub == "beam") fn = run_beam;
    else if (sub == "dtn") fn = run_dtn;
    else if (sub == "identity-check") fn = run_identity_check;
    else throw Error(ErrorKind::ConfigInvalid, "harness/run", "not a pipeline subcommand: " + sub);

    RunResult res;
    res.hash = config_hash(sub, cfg, seed);
    res.dir = run_directory(out_root, sub, res.hash);
    std::filesystem::create_directories(res.dir);
    RunManifest m;
    m.subcommand = sub;
    m.config_hash = res.hash;
    m.seed = seed;
    m.canonical_config = cfg.canonical();
    m.threads = thread_count();
    RunContext ctx{res.dir, m, log, seed};
    try {
        fn(cfg, ctx);
    } catch (const Error& e) {
        m.status = "error";
        m.error = error_record(e);
        m.write(res.dir / "manifest.json");
        throw;
    }
    m.write(res.dir / "manifest.json");
    log << "output=" << res.dir.string() << "\n";
    return res;
}

}  // namespace tdxray::harness
