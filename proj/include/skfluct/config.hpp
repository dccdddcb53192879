#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "skfluct/harness.hpp"

namespace skfluct {

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// Flat key=value format, one pair per line, '#' starts a comment
inline ConfigMap parse_config_text(const std::string& text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key");
        out[key] = value;
    }
    return out;
}

inline ConfigMap load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

inline std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(std::stoi(detail::trim(item)));
    if (out.empty()) throw std::invalid_argument("expected a comma-separated integer list");
    return out;
}

// Applies recognized keys onto cfg; unknown keys are an error so typos fail
// loudly instead of silently running defaults.
inline void apply_config(ExperimentConfig& cfg, const ConfigMap& map) {
    for (const auto& [key, value] : map) {
        if (key == "mixture")
            cfg.mixture = Mixture::parse(value);
        else if (key == "beta")
            cfg.beta = std::stod(value);
        else if (key == "n")
            cfg.n_list = parse_int_list(value);
        else if (key == "replicas")
            cfg.replicas = std::stoi(value);
        else if (key == "seed")
            cfg.master_seed = std::stoull(value);
        else if (key == "kmax")
            cfg.kmax = std::stoi(value);
        else if (key == "eps")
            cfg.eps = std::stod(value);
        else if (key == "delta")
            cfg.delta = std::stod(value);
        else if (key == "out_dir")
            cfg.out_dir = value;
        else if (key == "workers")
            cfg.workers = std::stoi(value);
        else
            throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

// Effective configuration as a key=value map; parse_config_text of the
// rendered text followed by apply_config reproduces the same configuration.
inline ConfigMap config_to_map(const ExperimentConfig& cfg) {
    ConfigMap out;
    out["mixture"] = cfg.mixture.to_string();
    out["beta"] = detail::fmt9(cfg.beta);
    {
        std::ostringstream os;
        for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
            if (i > 0) os << ',';
            os << cfg.n_list[i];
        }
        out["n"] = os.str();
    }
    out["replicas"] = std::to_string(cfg.replicas);
    out["seed"] = std::to_string(cfg.master_seed);
    out["kmax"] = std::to_string(cfg.kmax);
    out["eps"] = detail::fmt9(cfg.eps);
    out["delta"] = detail::fmt9(cfg.delta);
    out["out_dir"] = cfg.out_dir;
    out["workers"] = std::to_string(cfg.workers);
    return out;
}

inline std::string render_config(const ConfigMap& map) {
    std::ostringstream os;
    for (const auto& [k, v] : map) os << k << '=' << v << '\n';
    return os.str();
}

inline nlohmann::json effective_config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    for (const auto& [k, v] : config_to_map(cfg)) j[k] = v;
    return j;
}

}  // namespace skfluct
