// harness.hpp - seeded, parallel experiment execution.
//
// Trials are the unit of parallelism. Each (policy, trial) pair draws its
// RNG streams from (master_seed, stream tag, policy ordinal, trial), so the
// outputs are byte-identical no matter how many worker threads run.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "linmed/config.hpp"
#include "linmed/csvio.hpp"
#include "linmed/envs.hpp"
#include "linmed/errors.hpp"
#include "linmed/ope.hpp"
#include "linmed/policies.hpp"
#include "linmed/rng.hpp"

namespace linmed {

struct RegretCurve {
    std::string policy;
    std::vector<std::int64_t> rounds;
    std::vector<double> mean;       // mean cumulative regret per checkpoint
    std::vector<double> std_error;  // sample-std / sqrt(trials)
    int trials = 0;
};

struct OpeOutcome {
    std::vector<double> estimates;  // one importance-weighted value per trial
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation across trials
    double oracle = 0.0;
    // Monte-Carlo logs can estimate a propensity as exactly zero; those
    // records are floored at 1/mc_samples before weighting (clipped IPW)
    // and counted here. Closed-form logs never trigger this.
    std::int64_t floored_records = 0;
};

inline const std::vector<std::string>& known_policy_names() {
    static const std::vector<std::string> names = {
        "linmed-99", "linmed-90", "linmed-50", "linmed", "linmednopt",
        "exp2",      "oful",      "lints-freq", "lints-bayes"};
    return names;
}

// Log-spaced checkpoint rounds in [1, horizon], deduplicated, always ending
// at the horizon.
inline std::vector<std::int64_t> checkpoint_rounds(std::int64_t horizon, int count) {
    if (horizon < 1) throw std::invalid_argument("checkpoint_rounds: horizon must be >= 1");
    if (count < 1) throw std::invalid_argument("checkpoint_rounds: count must be >= 1");
    std::vector<std::int64_t> rounds;
    if (count == 1 || horizon == 1) return {horizon};
    const double log_n = std::log(static_cast<double>(horizon));
    for (int i = 0; i < count; ++i) {
        const double x = std::exp(log_n * i / (count - 1));
        std::int64_t t = std::llround(x);
        t = std::max<std::int64_t>(1, std::min(horizon, t));
        if (rounds.empty() || t > rounds.back()) rounds.push_back(t);
    }
    if (rounds.back() != horizon) rounds.push_back(horizon);
    return rounds;
}

inline Instance make_instance(const ExperimentConfig& cfg) {
    Instance inst;
    if (cfg.instance == "large_gap") {
        inst = instances::large_gap();
    } else if (cfg.instance == "end_of_optimism") {
        inst = instances::end_of_optimism(cfg.epsilon);
    } else if (cfg.instance == "k_dependency") {
        inst = instances::k_dependency(cfg.k);
    } else if (cfg.instance == "unit_ball") {
        inst = instances::unit_ball(cfg.d, cfg.k, cfg.instance_seed);
    } else if (cfg.instance == "ope") {
        inst = instances::ope();
    } else if (cfg.instance == "csv") {
        if (cfg.arms_csv.empty())
            throw ConfigError("config: instance 'csv' needs arms_csv");
        inst.name = "csv";
        inst.fixed_arms = load_arms_csv(cfg.arms_csv, cfg.normalize);
        inst.dim = static_cast<int>(inst.fixed_arms.front().size());
        if (cfg.theta_star.empty()) {
            inst.theta_star = Eigen::VectorXd::Unit(inst.dim, 0);
        } else {
            if (static_cast<int>(cfg.theta_star.size()) != inst.dim)
                throw ConfigError("config: theta_star dimension does not match the CSV arms");
            inst.theta_star = Eigen::Map<const Eigen::VectorXd>(cfg.theta_star.data(), inst.dim);
        }
        inst.sigma_star_sq = 1.0;
    } else {
        throw ConfigError("config: unknown instance '" + cfg.instance +
                          "' (expected large_gap, end_of_optimism, k_dependency, "
                          "unit_ball, ope, or csv)");
    }
    if (cfg.sigma_star_sq >= 0.0) inst.sigma_star_sq = cfg.sigma_star_sq;
    return inst;
}

// Builds a fresh policy for one trial. `logged` wraps posterior-sampling
// policies so each decision carries a Monte Carlo propensity estimate.
inline std::unique_ptr<Policy> make_policy(const std::string& name, const ExperimentConfig& cfg,
                                           int dim, std::int64_t horizon, bool logged = false) {
    ConfidenceParams confidence;
    confidence.sigma = std::sqrt(cfg.sigma_sq);
    confidence.s_bound = cfg.s_bound;

    auto linmed_cfg = [&](LinMedConfig base) {
        base.lambda = cfg.lambda;
        base.confidence = confidence;
        base.design_version = cfg.design_version;
        base.temperature = cfg.temperature;
        return base;
    };

    if (name == "linmed-99")
        return std::make_unique<LinMedPolicy>(name, dim, linmed_cfg(LinMedConfig::preset(99)));
    if (name == "linmed-90")
        return std::make_unique<LinMedPolicy>(name, dim, linmed_cfg(LinMedConfig::preset(90)));
    if (name == "linmed-50")
        return std::make_unique<LinMedPolicy>(name, dim, linmed_cfg(LinMedConfig::preset(50)));
    if (name == "linmed") {
        LinMedConfig base;
        base.alpha_emp = cfg.alpha_emp;
        base.alpha_opt = cfg.alpha_opt;
        return std::make_unique<LinMedPolicy>(name, dim, linmed_cfg(base));
    }
    if (name == "linmednopt")
        return std::make_unique<LinMedNoptPolicy>(name, dim, linmed_cfg(LinMedConfig()));
    if (name == "exp2")
        return std::make_unique<Exp2Policy>(name, dim, horizon, cfg.exp2_gamma, cfg.exp2_eta);
    if (name == "oful")
        return std::make_unique<OfulPolicy>(name, dim, cfg.lambda, confidence);
    if (name == "lints-freq" || name == "lints-bayes") {
        const auto variant = name == "lints-freq" ? LinTsVariant::kFreq : LinTsVariant::kBayes;
        if (logged)
            return std::make_unique<LinTsLoggedPolicy>(name, dim, cfg.lambda, variant,
                                                       confidence, cfg.mc_samples);
        return std::make_unique<LinTsPolicy>(name, dim, cfg.lambda, variant, confidence);
    }
    std::string known;
    for (const auto& n : known_policy_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("config: unknown policy '" + name + "' (known: " + known + ")");
}

// One trial of one policy; returns cumulative regret at the checkpoints.
// Rewards reach the policy `delay` rounds after the pull; whatever is still
// buffered at the horizon is delivered afterwards so every observation is
// eventually absorbed.
inline std::vector<double> simulate_trial(Policy& policy, const Instance& inst,
                                          const ArmSet& arms, std::int64_t horizon,
                                          std::int64_t delay,
                                          const std::vector<std::int64_t>& checkpoints,
                                          Rng& policy_rng, Rng& noise_rng) {
    DelayBuffer buffer(delay);
    std::vector<double> cum(checkpoints.size(), 0.0);
    double regret = 0.0;
    std::size_t next_checkpoint = 0;
    auto deliver = [&policy](const Arm& arm, double reward) { policy.update(arm, reward); };
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const PolicyDecision decision = policy.select(arms, policy_rng);
        const StepOutcome outcome = step(inst, arms, decision.arm_index, noise_rng);
        regret += outcome.instant_regret;
        buffer.push(t, arms[decision.arm_index], outcome.reward);
        buffer.release_due(t, deliver);
        while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == t)
            cum[next_checkpoint++] = regret;
    }
    buffer.flush(deliver);
    return cum;
}

namespace detail {

inline int resolve_threads(int configured) {
    if (configured > 0) return configured;
    if (const char* env = std::getenv("LINMED_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs job(0..total-1) on `threads` workers; job order never affects stored
// results because each job writes only its own slot.
template <typename Job>
inline void run_parallel(int threads, std::int64_t total, const Job& job) {
    if (threads <= 1 || total <= 1) {
        for (std::int64_t i = 0; i < total; ++i) job(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = static_cast<int>(std::min<std::int64_t>(threads, total));
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline void mean_and_sample_std(const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    sd = 0.0;
    if (xs.size() > 1) {
        for (double x : xs) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
    }
}

}  // namespace detail

inline void write_regret_csv(std::ostream& out, const std::vector<RegretCurve>& curves) {
    out << "policy,t,mean_regret,stderr,trials\n";
    for (const auto& curve : curves) {
        for (std::size_t i = 0; i < curve.rounds.size(); ++i) {
            out << curve.policy << ',' << curve.rounds[i] << ','
                << format_double(curve.mean[i]) << ',' << format_double(curve.std_error[i])
                << ',' << curve.trials << '\n';
        }
    }
}

// Runs every configured policy for the configured trials and aggregates
// per-checkpoint regret. Writes <out>/regret.csv unless `out` is empty.
inline std::vector<RegretCurve> run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const Instance inst = make_instance(cfg);
    const auto checkpoints = checkpoint_rounds(cfg.horizon, cfg.checkpoints);
    const int n_policies = static_cast<int>(cfg.policies.size());
    const std::int64_t trials = cfg.trials;

    // Fail fast on unknown policy names before spawning workers.
    for (const auto& name : cfg.policies) make_policy(name, cfg, inst.dim, cfg.horizon);

    std::vector<std::vector<std::vector<double>>> results(
        n_policies, std::vector<std::vector<double>>(trials));
    detail::run_parallel(
        detail::resolve_threads(cfg.threads), n_policies * trials, [&](std::int64_t i) {
            const int p = static_cast<int>(i / trials);
            const std::int64_t t = i % trials;
            const ArmSet arms = inst.realize_arms(derive_seed(
                {cfg.master_seed, static_cast<std::uint64_t>(Stream::kArmGeneration),
                 static_cast<std::uint64_t>(t)}));
            auto policy = make_policy(cfg.policies[p], cfg, inst.dim, cfg.horizon);
            Rng policy_rng(derive_seed({cfg.master_seed,
                                        static_cast<std::uint64_t>(Stream::kPolicy),
                                        static_cast<std::uint64_t>(p),
                                        static_cast<std::uint64_t>(t)}));
            Rng noise_rng(derive_seed({cfg.master_seed,
                                       static_cast<std::uint64_t>(Stream::kEnvNoise),
                                       static_cast<std::uint64_t>(p),
                                       static_cast<std::uint64_t>(t)}));
            results[p][t] = simulate_trial(*policy, inst, arms, cfg.horizon, cfg.delay,
                                           checkpoints, policy_rng, noise_rng);
        });

    std::vector<RegretCurve> curves(n_policies);
    for (int p = 0; p < n_policies; ++p) {
        RegretCurve& curve = curves[p];
        curve.policy = cfg.policies[p];
        curve.rounds = checkpoints;
        curve.trials = static_cast<int>(trials);
        curve.mean.resize(checkpoints.size());
        curve.std_error.resize(checkpoints.size());
        std::vector<double> column(trials);
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            for (std::int64_t t = 0; t < trials; ++t) column[t] = results[p][t][c];
            double mean = 0.0, sd = 0.0;
            detail::mean_and_sample_std(column, mean, sd);
            curve.mean[c] = mean;
            curve.std_error[c] = sd / std::sqrt(static_cast<double>(trials));
        }
    }

    if (!cfg.out.empty()) {
        std::filesystem::create_directories(cfg.out);
        const auto path = std::filesystem::path(cfg.out) / "regret.csv";
        std::ofstream out(path);
        if (!out) throw ConfigError("run: cannot write '" + path.string() + "'");
        write_regret_csv(out, curves);
    }
    return curves;
}

// Seed for one logging trial of the off-policy protocol.
inline std::uint64_t ope_trial_seed(std::uint64_t master_seed, std::int64_t trial) {
    return derive_seed({master_seed, 0x6f70655fULL, static_cast<std::uint64_t>(trial)});
}

// Off-policy evaluation protocol: the single configured policy logs
// `horizon` rounds per trial; each log is scored against the uniform target
// by inverse propensity weighting. Writes <out>/ope_estimates.csv and
// <out>/ope_summary.csv unless `out` is empty.
inline OpeOutcome run_ope(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.policies.size() != 1)
        throw ConfigError("ope: configure exactly one logging policy, got " +
                          std::to_string(cfg.policies.size()));
    const Instance inst = make_instance(cfg);
    if (inst.arm_generator)
        throw ConfigError("ope: instance '" + inst.name + "' regenerates arms per trial");
    const int num_arms = static_cast<int>(inst.fixed_arms.size());
    make_policy(cfg.policies.front(), cfg, inst.dim, cfg.horizon, true);

    OpeOutcome outcome;
    outcome.estimates.assign(cfg.trials, 0.0);
    std::vector<std::int64_t> floored(cfg.trials, 0);
    detail::run_parallel(
        detail::resolve_threads(cfg.threads), cfg.trials, [&](std::int64_t t) {
            auto policy = make_policy(cfg.policies.front(), cfg, inst.dim, cfg.horizon, true);
            auto records = log_run(*policy, inst, cfg.horizon,
                                   ope_trial_seed(cfg.master_seed, t));
            for (auto& rec : records) {
                if (rec.propensity == 0.0) {
                    rec.propensity = 1.0 / static_cast<double>(cfg.mc_samples);
                    floored[t] += 1;
                }
            }
            outcome.estimates[t] = ipw_estimate(records, uniform_target(num_arms)).estimate;
        });
    for (std::int64_t count : floored) outcome.floored_records += count;

    detail::mean_and_sample_std(outcome.estimates, outcome.mean, outcome.stddev);
    outcome.oracle =
        oracle_value(std::vector<double>(num_arms, 1.0 / num_arms), inst);

    if (!cfg.out.empty()) {
        std::filesystem::create_directories(cfg.out);
        const auto est_path = std::filesystem::path(cfg.out) / "ope_estimates.csv";
        std::ofstream est(est_path);
        if (!est) throw ConfigError("ope: cannot write '" + est_path.string() + "'");
        est << "trial,estimate\n";
        for (std::size_t t = 0; t < outcome.estimates.size(); ++t)
            est << t << ',' << format_double(outcome.estimates[t]) << '\n';
        const auto sum_path = std::filesystem::path(cfg.out) / "ope_summary.csv";
        std::ofstream sum(sum_path);
        if (!sum) throw ConfigError("ope: cannot write '" + sum_path.string() + "'");
        sum << "policy,horizon,trials,mean,std,oracle\n";
        sum << cfg.policies.front() << ',' << cfg.horizon << ',' << cfg.trials << ','
            << format_double(outcome.mean) << ',' << format_double(outcome.stddev) << ','
            << format_double(outcome.oracle) << '\n';
    }
    return outcome;
}

}  // namespace linmed
