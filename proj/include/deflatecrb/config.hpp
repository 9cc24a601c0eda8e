#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "deflatecrb/harness.hpp"

namespace deflatecrb {

// Flat-sectioned key-value scenario files (TOML-compatible subset):
//
//   [dims]
//   n = 100
//   k = 400
//   la = 10
//   lb = 10
//   [noise]
//   snr_db = [0, 5, 10]
//   sigma_alpha2 = 1.0
//   sigma_beta2 = 1.0
//   [run]
//   trials = 500
//   seed = 42
//   estimators = ["omp", "oracle_ls"]
//   deflation = "on"
//   prior = "gaussian"

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> parse_list(const std::string& v) {
    std::string body = v;
    if (body.size() >= 2 && body.front() == '[' && body.back() == ']')
        body = body.substr(1, body.size() - 2);
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(body);
    while (std::getline(is, item, ',')) {
        item = unquote(trim(item));
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace detail

// Parsed config as dotted-key -> raw value text.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("config: cannot read '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InvalidInput("config: malformed section at line " + std::to_string(lineno));
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

inline Scenario scenario_from_config(const std::map<std::string, std::string>& kv) {
    auto require = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw InvalidInput("config: missing key '" + key + "'");
        return it->second;
    };
    auto get_or = [&](const std::string& key, const std::string& def) {
        auto it = kv.find(key);
        return it == kv.end() ? def : it->second;
    };

    Scenario sc;
    const ProblemDims dims(std::stoll(require("dims.n")), std::stoll(require("dims.k")),
                           std::stoll(require("dims.la")), std::stoll(require("dims.lb")));
    for (const std::string& s : detail::parse_list(require("noise.snr_db")))
        sc.grid.push_back({dims, std::stod(s)});
    if (sc.grid.empty()) throw InvalidInput("config: noise.snr_db must be a nonempty list");

    sc.sigma_alpha2 = std::stod(get_or("noise.sigma_alpha2", "1.0"));
    sc.sigma_beta2 = std::stod(get_or("noise.sigma_beta2", "1.0"));
    sc.trials = std::stoi(get_or("run.trials", "500"));
    sc.seed = std::stoull(get_or("run.seed", "0"));

    for (const std::string& name :
         detail::parse_list(get_or("run.estimators", "[\"omp\", \"cosamp\", \"bpdn\", \"oracle_ls\"]")))
        sc.estimators.push_back(estimator_from_name(name));

    const std::string defl = detail::unquote(get_or("run.deflation", "on"));
    if (defl == "on") sc.deflation = DeflationMode::On;
    else if (defl == "off") sc.deflation = DeflationMode::Off;
    else if (defl == "both") sc.deflation = DeflationMode::Both;
    else throw InvalidInput("config: run.deflation must be on|off|both");

    const std::string prior = detail::unquote(get_or("run.prior", "gaussian"));
    if (prior == "gaussian") sc.prior = AmplitudePrior::Gaussian;
    else if (prior == "rademacher") sc.prior = AmplitudePrior::RademacherScaled;
    else throw InvalidInput("config: run.prior must be gaussian|rademacher");

    sc.check();
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    return scenario_from_config(parse_config_file(path));
}

} // namespace deflatecrb
