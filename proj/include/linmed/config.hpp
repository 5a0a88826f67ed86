// config.hpp - experiment configuration: flat "key = value" text files.
//
// One canonical form: every key appears exactly once, in the order
// serialize_config emits them. Lines starting with '#' (or anything after
// an inline " #") are comments. parse/serialize round-trip exactly.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "linmed/csvio.hpp"
#include "linmed/errors.hpp"

namespace linmed {

struct ExperimentConfig {
    // Instance selection.
    std::string instance = "large_gap";  // large_gap | end_of_optimism |
                                         // k_dependency | unit_ball | ope | csv
    double sigma_star_sq = -1.0;         // environment noise; <0 keeps the
                                         // instance default
    double epsilon = 0.01;               // end_of_optimism gap parameter
    int k = 2;                           // arm count (k_dependency, unit_ball)
    int d = 2;                           // dimension (unit_ball)
    std::uint64_t instance_seed = 0;     // unit_ball parameter/arm seed
    std::string arms_csv;                // csv instance: arm file
    bool normalize = false;              // csv instance: rescale long arms
    std::vector<double> theta_star;      // csv instance: hidden parameter

    // Run shape.
    std::int64_t horizon = 1000;
    int trials = 10;
    std::uint64_t master_seed = 1;
    std::int64_t delay = 0;
    int checkpoints = 100;
    int threads = 0;  // 0: LINMED_THREADS env var, else hardware concurrency
    std::string out = "out";

    // Shared policy inputs.
    std::vector<std::string> policies = {"linmed-90"};
    double sigma_sq = 1.0;  // noise-variance guess fed to confidence radii
    double s_bound = 1.0;   // bound on the hidden parameter norm
    double lambda = 1.0;    // ridge regularizer

    // Policy-specific knobs.
    double alpha_emp = 0.9;    // custom "linmed" mixture weights
    double alpha_opt = 0.05;
    int design_version = 0;    // 0: rescaled-arm design, 1: thresholded
    std::optional<double> temperature;      // fixed gap-weight temperature;
                                            // unset: confidence radius
    std::int64_t mc_samples = 1000;         // posterior-sampling logging draws
    std::optional<double> exp2_gamma;       // unset: tuned from the design
    std::optional<double> exp2_eta;         // unset: gamma / design leverage
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size() || value.front() == '-') throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-unsigned value '" + value + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config: key '" + key + "' must be true or false, got '" + value + "'");
}

inline std::vector<std::string> parse_name_list(const std::string& value) {
    std::vector<std::string> names;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) names.push_back(item);
    }
    return names;
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : parse_name_list(value)) out.push_back(parse_real(key, item));
    return out;
}

inline std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not of the form key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        for (const auto& s : seen)
            if (s == key)
                throw ConfigError("config: duplicate key '" + key + "' at line " +
                                  std::to_string(line_no));
        seen.push_back(key);

        if (key == "instance") cfg.instance = value;
        else if (key == "sigma_star_sq") cfg.sigma_star_sq = detail::parse_real(key, value);
        else if (key == "epsilon") cfg.epsilon = detail::parse_real(key, value);
        else if (key == "k") cfg.k = static_cast<int>(detail::parse_int(key, value));
        else if (key == "d") cfg.d = static_cast<int>(detail::parse_int(key, value));
        else if (key == "instance_seed") cfg.instance_seed = detail::parse_uint(key, value);
        else if (key == "arms_csv") cfg.arms_csv = value;
        else if (key == "normalize") cfg.normalize = detail::parse_bool(key, value);
        else if (key == "theta_star") cfg.theta_star = detail::parse_real_list(key, value);
        else if (key == "horizon") cfg.horizon = detail::parse_int(key, value);
        else if (key == "trials") cfg.trials = static_cast<int>(detail::parse_int(key, value));
        else if (key == "master_seed") cfg.master_seed = detail::parse_uint(key, value);
        else if (key == "delay") cfg.delay = detail::parse_int(key, value);
        else if (key == "checkpoints") cfg.checkpoints = static_cast<int>(detail::parse_int(key, value));
        else if (key == "threads") cfg.threads = static_cast<int>(detail::parse_int(key, value));
        else if (key == "out") cfg.out = value;
        else if (key == "policies") cfg.policies = detail::parse_name_list(value);
        else if (key == "sigma_sq") cfg.sigma_sq = detail::parse_real(key, value);
        else if (key == "s_bound") cfg.s_bound = detail::parse_real(key, value);
        else if (key == "lambda") cfg.lambda = detail::parse_real(key, value);
        else if (key == "alpha_emp") cfg.alpha_emp = detail::parse_real(key, value);
        else if (key == "alpha_opt") cfg.alpha_opt = detail::parse_real(key, value);
        else if (key == "design_version") cfg.design_version = static_cast<int>(detail::parse_int(key, value));
        else if (key == "temperature")
            cfg.temperature = value == "auto" ? std::nullopt
                                              : std::optional<double>(detail::parse_real(key, value));
        else if (key == "mc_samples") cfg.mc_samples = detail::parse_int(key, value);
        else if (key == "exp2_gamma")
            cfg.exp2_gamma = value == "auto" ? std::nullopt
                                             : std::optional<double>(detail::parse_real(key, value));
        else if (key == "exp2_eta")
            cfg.exp2_eta = value == "auto" ? std::nullopt
                                           : std::optional<double>(detail::parse_real(key, value));
        else
            throw ConfigError("config: unknown key '" + key + "' at line " +
                              std::to_string(line_no));
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    std::vector<std::string> theta;
    for (double v : cfg.theta_star) theta.push_back(format_double(v));
    out << "instance = " << cfg.instance << '\n'
        << "sigma_star_sq = " << format_double(cfg.sigma_star_sq) << '\n'
        << "epsilon = " << format_double(cfg.epsilon) << '\n'
        << "k = " << cfg.k << '\n'
        << "d = " << cfg.d << '\n'
        << "instance_seed = " << cfg.instance_seed << '\n'
        << "arms_csv = " << cfg.arms_csv << '\n'
        << "normalize = " << (cfg.normalize ? "true" : "false") << '\n'
        << "theta_star = " << detail::join(theta) << '\n'
        << "horizon = " << cfg.horizon << '\n'
        << "trials = " << cfg.trials << '\n'
        << "master_seed = " << cfg.master_seed << '\n'
        << "delay = " << cfg.delay << '\n'
        << "checkpoints = " << cfg.checkpoints << '\n'
        << "threads = " << cfg.threads << '\n'
        << "out = " << cfg.out << '\n'
        << "policies = " << detail::join(cfg.policies) << '\n'
        << "sigma_sq = " << format_double(cfg.sigma_sq) << '\n'
        << "s_bound = " << format_double(cfg.s_bound) << '\n'
        << "lambda = " << format_double(cfg.lambda) << '\n'
        << "alpha_emp = " << format_double(cfg.alpha_emp) << '\n'
        << "alpha_opt = " << format_double(cfg.alpha_opt) << '\n'
        << "design_version = " << cfg.design_version << '\n'
        << "temperature = " << (cfg.temperature ? format_double(*cfg.temperature) : "auto") << '\n'
        << "mc_samples = " << cfg.mc_samples << '\n'
        << "exp2_gamma = " << (cfg.exp2_gamma ? format_double(*cfg.exp2_gamma) : "auto") << '\n'
        << "exp2_eta = " << (cfg.exp2_eta ? format_double(*cfg.exp2_eta) : "auto") << '\n';
    return out.str();
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.horizon < 1) throw ConfigError("config: horizon must be >= 1");
    if (cfg.trials < 1) throw ConfigError("config: trials must be >= 1");
    if (cfg.checkpoints < 1) throw ConfigError("config: checkpoints must be >= 1");
    if (cfg.delay < 0) throw ConfigError("config: delay must be >= 0");
    if (cfg.threads < 0) throw ConfigError("config: threads must be >= 0");
    if (cfg.policies.empty()) throw ConfigError("config: policies must not be empty");
    if (!(cfg.sigma_sq > 0.0)) throw ConfigError("config: sigma_sq must be > 0");
    if (!(cfg.s_bound > 0.0)) throw ConfigError("config: s_bound must be > 0");
    if (!(cfg.lambda > 0.0)) throw ConfigError("config: lambda must be > 0");
    if (cfg.temperature && !(*cfg.temperature > 0.0))
        throw ConfigError("config: temperature must be > 0 or auto");
    if (cfg.mc_samples < 1) throw ConfigError("config: mc_samples must be >= 1");
}

}  // namespace linmed
