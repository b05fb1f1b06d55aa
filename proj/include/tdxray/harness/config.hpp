#pragma once

// Flat "section.key = value" configuration validated against a per-subcommand schema.

#include "tdxray/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tdxray::harness {

enum class KeyType { Int, Double, String, List, Bool };

inline const char* to_string(KeyType t) {
    switch (t) {
        case KeyType::Int: return "int";
        case KeyType::Double: return "double";
        case KeyType::String: return "string";
        case KeyType::List: return "list";
        case KeyType::Bool: return "bool";
    }
    return "?";
}

struct KeySpec {
    std::string name;
    KeyType type = KeyType::Double;
    std::string default_value;
    std::string help;
    std::vector<std::string> choices;  // allowed values for strings (empty: any)
};

struct Schema {
    std::string subcommand;
    std::vector<KeySpec> keys;

    const KeySpec* find(const std::string& name) const {
        for (const auto& k : keys)
            if (k.name == name) return &k;
        return nullptr;
    }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const char* ws = " \t\r";
    std::size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    if (*b == '+') ++b;
    auto r = std::from_chars(b, e, out);
    return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

inline bool parse_int(const std::string& s, long long& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    if (*b == '+') ++b;
    auto r = std::from_chars(b, e, out);
    return r.ec == std::errc() && r.ptr == e;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

/// Canonical text of a value of the given type; throws ConfigInvalid when malformed.
inline std::string normalize(const KeySpec& spec, const std::string& raw, const std::string& where) {
    auto bad = [&](const std::string& why) {
        return Error(ErrorKind::ConfigInvalid, "harness/config",
                     where + ": key '" + spec.name + "' expects " + to_string(spec.type) + ", " + why);
    };
    switch (spec.type) {
        case KeyType::Int: {
            long long v = 0;
            if (!parse_int(raw, v)) throw bad("got '" + raw + "'");
            return std::to_string(v);
        }
        case KeyType::Double: {
            double v = 0.0;
            if (!parse_double(raw, v)) throw bad("got '" + raw + "'");
            return format_double(v);
        }
        case KeyType::Bool: {
            if (raw == "true" || raw == "1") return "true";
            if (raw == "false" || raw == "0") return "false";
            throw bad("got '" + raw + "'");
        }
        case KeyType::List: {
            std::string out;
            for (const auto& item : split_list(raw)) {
                double v = 0.0;
                if (!parse_double(item, v)) throw bad("bad element '" + item + "'");
                if (!out.empty()) out += ",";
                out += format_double(v);
            }
            if (out.empty()) throw bad("empty list");
            return out;
        }
        case KeyType::String: {
            if (!spec.choices.empty()) {
                for (const auto& c : spec.choices)
                    if (c == raw) return raw;
                std::string all;
                for (const auto& c : spec.choices) all += (all.empty() ? "" : "|") + c;
                throw bad("got '" + raw + "', allowed " + all);
            }
            return raw;
        }
    }
    return raw;
}

}  // namespace config_detail

/// Validated configuration: every schema key has a value (explicit or default).
class Config {
public:
    Config() = default;

    /// Parses "key = value" lines; '#' starts a comment. Unknown, duplicate or
    /// malformed keys raise ConfigInvalid with the line number.
    static Config parse(const std::string& text, const Schema& schema, const std::string& origin = "<text>") {
        using namespace config_detail;
        Config c;
        c.schema_ = schema;
        std::map<std::string, std::string> given;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string where = origin + ":" + std::to_string(lineno);
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorKind::ConfigInvalid, "harness/config", where + ": expected 'key = value'");
            std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            const KeySpec* spec = schema.find(key);
            if (!spec)
                throw Error(ErrorKind::ConfigInvalid, "harness/config",
                            where + ": unknown key '" + key + "' for subcommand " + schema.subcommand);
            if (given.count(key)) throw Error(ErrorKind::ConfigInvalid, "harness/config", where + ": duplicate key '" + key + "'");
            given[key] = normalize(*spec, value, where);
        }
        for (const auto& k : schema.keys) {
            auto it = given.find(k.name);
            c.values_[k.name] = it != given.end() ? it->second : normalize(k, k.default_value, "default");
        }
        return c;
    }

    static Config load(const std::string& path, const Schema& schema) {
        std::ifstream f(path);
        if (!f) throw Error(ErrorKind::ConfigInvalid, "harness/config", "cannot read " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), schema, path);
    }

    const Schema& schema() const { return schema_; }

    long long get_int(const std::string& key) const {
        long long v = 0;
        config_detail::parse_int(raw(key, KeyType::Int), v);
        return v;
    }
    double get_double(const std::string& key) const {
        double v = 0.0;
        config_detail::parse_double(raw(key, KeyType::Double), v);
        return v;
    }
    bool get_bool(const std::string& key) const { return raw(key, KeyType::Bool) == "true"; }
    const std::string& get_string(const std::string& key) const { return raw(key, KeyType::String); }
    std::vector<double> get_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : config_detail::split_list(raw(key, KeyType::List))) {
            double v = 0.0;
            config_detail::parse_double(item, v);
            out.push_back(v);
        }
        return out;
    }

    /// Sorted "key=value" lines of normalized values (defaults included).
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

private:
    const std::string& raw(const std::string& key, KeyType type) const {
        const KeySpec* spec = schema_.find(key);
        if (!spec || spec->type != type)
            throw Error(ErrorKind::ConfigInvalid, "harness/config", "no " + std::string(to_string(type)) + " key '" + key + "'");
        return values_.at(key);
    }

    Schema schema_;
    std::map<std::string, std::string> values_;
};

}  // namespace tdxray::harness
