#pragma once

// Command dispatch behind the tdxray executable.

#include "tdxray/harness/acceptance.hpp"
#include "tdxray/harness/runner.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace tdxray::harness {

struct CliArgs {
    std::string subcommand;
    std::optional<std::string> config_path;  // required except for acceptance
    std::string out = "out";
    std::uint64_t seed = 0;
    std::string only;
};

/// Exit status: 0 success, 1 acceptance criteria failed, 2 error (record on `err`).
inline int run_command(const CliArgs& a, std::ostream& out, std::ostream& err) {
    try {
        const Schema schema = schema_for(a.subcommand);
        if (!a.config_path && a.subcommand != "acceptance")
            throw Error(ErrorKind::ConfigInvalid, "harness/cli", "--config is required for " + a.subcommand);
        const Config cfg = a.config_path ? Config::load(*a.config_path, schema) : Config::parse("", schema);
        if (a.subcommand != "acceptance") {
            if (!a.only.empty()) throw Error(ErrorKind::ConfigInvalid, "harness/cli", "--only applies to the acceptance subcommand");
            run_pipeline(a.subcommand, cfg, a.seed, a.out, out);
            return 0;
        }
        AcceptanceOptions o;
        o.tolerance_scale = cfg.get_double("acceptance.tolerance_scale");
        o.only = a.only;
        o.seed = a.seed;
        const std::string hash = config_hash("acceptance", cfg, a.seed, "only=" + a.only + "\n");
        const auto dir = run_directory(a.out, "acceptance", hash);
        std::filesystem::create_directories(dir);
        RunManifest m;
        m.subcommand = "acceptance";
        m.config_hash = hash;
        m.seed = a.seed;
        m.canonical_config = cfg.canonical() + (a.only.empty() ? "" : "only=" + a.only + "\n");
        m.threads = thread_count();
        auto rows = run_acceptance(o, [&](const CriterionResult& r) { out << format_result(r) << std::endl; });
        bool all = !rows.empty();
        for (const auto& r : rows) {
            all = all && r.pass;
            m.tolerance("criterion_" + std::to_string(r.id), r.tolerance);
            m.stage_seconds.emplace_back("criterion_" + std::to_string(r.id), r.seconds);
        }
        acceptance_table(rows).write((dir / "acceptance.csv").string());
        m.outputs.push_back("acceptance.csv");
        m.status = all ? "ok" : "failed";
        m.write(dir / "manifest.json");
        out << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << " (" << rows.size() << " criteria) output=" << dir.string() << "\n";
        return all ? 0 : 1;
    } catch (const Error& e) {
        err << error_record(e) << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error kind=Internal where=harness message=\"" << e.what() << "\"\n";
        return 2;
    }
}

}  // namespace tdxray::harness
