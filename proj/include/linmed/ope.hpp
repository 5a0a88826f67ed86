// ope.hpp - logged-bandit data and importance-weighted policy evaluation.
#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "linmed/csvio.hpp"
#include "linmed/envs.hpp"
#include "linmed/errors.hpp"
#include "linmed/policies.hpp"
#include "linmed/rng.hpp"

namespace linmed {

struct LogRecord {
    std::int64_t round = 0;
    int arm_index = 0;
    double propensity = 0.0;  // probability the logger assigned to arm_index
    double reward = 0.0;
};

struct IPWResult {
    double estimate = 0.0;
    std::vector<double> weights;  // per-record target/logging probability ratio
};

// Probability the evaluated policy assigns to an arm at a round.
using TargetPolicy = std::function<double(std::int64_t round, int arm_index)>;

inline TargetPolicy uniform_target(int num_arms) {
    if (num_arms < 1) throw std::invalid_argument("uniform_target: need at least one arm");
    const double p = 1.0 / num_arms;
    return [p](std::int64_t, int) { return p; };
}

// Runs a logging policy for `horizon` rounds and records its propensities.
// Policies without reported propensities (plain posterior sampling) must be
// wrapped, e.g. by LinTsLoggedPolicy; a record whose estimated propensity is
// zero is kept as written and only rejected at estimation time.
inline std::vector<LogRecord> log_run(Policy& policy, const Instance& inst,
                                      std::int64_t horizon, std::uint64_t trial_seed) {
    if (horizon < 1) throw std::invalid_argument("log_run: horizon must be >= 1");
    Rng policy_rng(derive_seed({trial_seed, static_cast<std::uint64_t>(Stream::kPolicy)}));
    Rng noise_rng(derive_seed({trial_seed, static_cast<std::uint64_t>(Stream::kEnvNoise)}));
    const ArmSet arms =
        inst.realize_arms(derive_seed({trial_seed, static_cast<std::uint64_t>(Stream::kArmGeneration)}));

    std::vector<LogRecord> records;
    records.reserve(horizon);
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const PolicyDecision decision = policy.select(arms, policy_rng);
        if (!decision.propensity.has_value())
            throw std::invalid_argument("log_run: policy '" + policy.name() +
                                        "' does not report propensities");
        const StepOutcome outcome = step(inst, arms, decision.arm_index, noise_rng);
        records.push_back({t, decision.arm_index, *decision.propensity, outcome.reward});
        policy.update(arms[decision.arm_index], outcome.reward);
    }
    return records;
}

// Inverse-propensity-weighted value estimate of the target policy.
inline IPWResult ipw_estimate(const std::vector<LogRecord>& records, const TargetPolicy& target) {
    if (records.empty()) throw std::invalid_argument("ipw_estimate: empty log");
    IPWResult result;
    result.weights.reserve(records.size());
    double sum = 0.0;
    for (const auto& rec : records) {
        if (!(rec.propensity > 0.0))
            throw EstimatorUndefined("ipw_estimate: zero propensity at round " +
                                     std::to_string(rec.round));
        const double w = target(rec.round, rec.arm_index) / rec.propensity;
        result.weights.push_back(w);
        sum += w * rec.reward;
    }
    result.estimate = sum / static_cast<double>(records.size());
    return result;
}

// Exact value of a stationary target distribution on a fixed-arm instance.
inline double oracle_value(const std::vector<double>& target_probs, const Instance& inst) {
    if (inst.arm_generator)
        throw std::invalid_argument(
            "oracle_value: instance '" + inst.name + "' regenerates arms per trial");
    if (target_probs.size() != inst.fixed_arms.size())
        throw std::invalid_argument("oracle_value: target size mismatch");
    double total = 0.0, value = 0.0;
    for (std::size_t i = 0; i < target_probs.size(); ++i) {
        if (target_probs[i] < 0.0)
            throw std::invalid_argument("oracle_value: negative target probability");
        total += target_probs[i];
        value += target_probs[i] * inst.theta_star.dot(inst.fixed_arms[i]);
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("oracle_value: target probabilities do not sum to 1");
    return value;
}

inline void write_log_csv(std::ostream& out, const std::vector<LogRecord>& records) {
    out << "round,arm_index,propensity,reward\n";
    for (const auto& rec : records) {
        out << rec.round << ',' << rec.arm_index << ',' << format_double(rec.propensity)
            << ',' << format_double(rec.reward) << '\n';
    }
}

inline void write_log_csv(const std::string& path, const std::vector<LogRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ParseError("write_log_csv: cannot open '" + path + "'");
    write_log_csv(out, records);
}

inline std::vector<LogRecord> read_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_log_csv: cannot open '" + path + "'");
    std::vector<LogRecord> records;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        if (row == 1 && line.rfind("round", 0) == 0) continue;  // header
        const auto cells = split_csv_line(line);
        if (cells.size() != 4)
            throw ParseError("read_log_csv: row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " fields, expected 4");
        try {
            records.push_back({std::stoll(cells[0]), std::stoi(cells[1]), std::stod(cells[2]),
                               std::stod(cells[3])});
        } catch (const std::exception&) {
            throw ParseError("read_log_csv: row " + std::to_string(row) +
                             " has a non-numeric field");
        }
    }
    return records;
}

}  // namespace linmed
