#pragma once

// Run manifest: config hash, toolkit version, tolerances, stage wall-clock.

#include "tdxray/core.hpp"
#include "tdxray/harness/config.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace tdxray::harness {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// 16 hex digits identifying subcommand, normalized config, seed and any extra run options.
inline std::string config_hash(const std::string& subcommand, const Config& c, std::uint64_t seed,
                               const std::string& extra = "") {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(subcommand + "\n" + c.canonical() + "seed=" + std::to_string(seed) + "\n" + extra)));
    return buf;
}

struct RunManifest {
    std::string subcommand;
    std::string config_hash;
    std::string version = kVersion;
    std::uint64_t seed = 0;
    std::string canonical_config;
    unsigned threads = 1;
    std::vector<std::pair<std::string, double>> tolerances;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<std::string> outputs;
    std::string status = "ok";
    std::string error;

    void tolerance(const std::string& name, double v) { tolerances.emplace_back(name, v); }

    /// Runs fn and records its wall-clock under `name`.
    template <class Fn>
    decltype(auto) stage(const std::string& name, Fn&& fn) {
        struct Timer {
            RunManifest* m;
            std::string name;
            std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
            ~Timer() {
                m->stage_seconds.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
        } timer{this, name};
        return fn();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["subcommand"] = subcommand;
        j["config_hash"] = config_hash;
        j["version"] = version;
        j["seed"] = seed;
        j["threads"] = threads;
        j["config"] = canonical_config;
        auto& tol = j["tolerances"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : tolerances) tol[k] = v;
        auto& st = j["wall_clock_seconds"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : stage_seconds) st[k] = v;
        j["outputs"] = outputs;
        j["status"] = status;
        if (!error.empty()) j["error"] = error;
        return j;
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::InvalidArgument, "harness/manifest", "cannot write " + path.string());
        f << to_json().dump(2) << '\n';
    }
};

}  // namespace tdxray::harness
