// linmed_main.cpp - command line front end.
//
//   linmed run --config FILE [--seed N] [--threads N] [--out DIR]
//   linmed ope --config FILE [--seed N] [--threads N] [--out DIR] [--write-logs N]
//   linmed design-check [--d N] [--k N] [--seeds N] [--csv FILE] [--normalize]
//   linmed verify
//
// Exit code 0 on success, nonzero with a diagnostic line on any error.
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "linmed/linmed.hpp"

namespace {

using namespace linmed;

void apply_overrides(ExperimentConfig& cfg, const CLI::Option* seed_opt, std::uint64_t seed,
                     const CLI::Option* threads_opt, int threads,
                     const CLI::Option* out_opt, const std::string& out) {
    if (seed_opt->count() > 0) cfg.master_seed = seed;
    if (threads_opt->count() > 0) cfg.threads = threads;
    if (out_opt->count() > 0) cfg.out = out;
}

int cmd_run(const ExperimentConfig& cfg) {
    const auto curves = run_experiment(cfg);
    for (const auto& curve : curves) {
        std::printf("%-12s final mean regret %10.3f (stderr %.3f, %d trials)\n",
                    curve.policy.c_str(), curve.mean.back(), curve.std_error.back(),
                    curve.trials);
    }
    if (!cfg.out.empty())
        std::printf("wrote %s\n", (std::filesystem::path(cfg.out) / "regret.csv").string().c_str());
    return 0;
}

int cmd_ope(const ExperimentConfig& cfg, int write_logs) {
    const OpeOutcome outcome = run_ope(cfg);
    std::printf("policy %s: ipw mean %.4f, std %.4f, oracle %.4f (%d trials, horizon %lld)\n",
                cfg.policies.front().c_str(), outcome.mean, outcome.stddev, outcome.oracle,
                cfg.trials, static_cast<long long>(cfg.horizon));
    if (write_logs > 0 && !cfg.out.empty()) {
        const Instance inst = make_instance(cfg);
        const int n = std::min(write_logs, cfg.trials);
        for (int t = 0; t < n; ++t) {
            auto policy = make_policy(cfg.policies.front(), cfg, inst.dim, cfg.horizon, true);
            const auto records =
                log_run(*policy, inst, cfg.horizon, ope_trial_seed(cfg.master_seed, t));
            const auto path =
                std::filesystem::path(cfg.out) / ("ope_log_" + std::to_string(t) + ".csv");
            write_log_csv(path.string(), records);
        }
        std::printf("wrote %d log file(s) under %s\n", n, cfg.out.c_str());
    }
    return 0;
}

int cmd_design_check(int d, int k, int seeds, std::uint64_t seed, const std::string& csv,
                     bool normalize) {
    std::vector<ArmSet> sets;
    if (!csv.empty()) {
        sets.push_back(load_arms_csv(csv, normalize));
        d = static_cast<int>(sets.front().front().size());
        std::printf("design-check: %zu arms of dimension %d from %s\n", sets.front().size(), d,
                    csv.c_str());
    } else {
        for (int s = 0; s < seeds; ++s) {
            Rng rng(derive_seed({seed, 0xde51ULL, static_cast<std::uint64_t>(s)}));
            sets.push_back(sample_unit_ball_arms(d, k, rng));
        }
        std::printf("design-check: d=%d k=%d seeds=%d\n", d, k, seeds);
    }

    int ok = 0;
    int max_tau = 0;
    double max_lev = 0.0;
    for (const auto& arms : sets) {
        const auto [design, report] = approx_design(arms);
        double weight_sum = 0.0;
        for (const auto& [idx, w] : design.weights) weight_sum += w;
        const bool pass = report.max_leverage <= report.tau &&
                          report.tau <= design_support_cap(d) &&
                          design.support_size <= report.tau &&
                          std::abs(weight_sum - 1.0) <= 1e-9;
        if (pass) ++ok;
        max_tau = std::max(max_tau, report.tau);
        max_lev = std::max(max_lev, report.max_leverage);
    }
    std::printf("  certificates: %d/%zu ok\n", ok, sets.size());
    std::printf("  max tau = %d (cap %d)\n", max_tau, design_support_cap(d));
    std::printf("  max design leverage = %.4f\n", max_lev);
    if (d >= 2)
        std::printf("  max tau / (d ln d) = %.4f\n",
                    max_tau / (d * std::log(static_cast<double>(d))));
    if (ok != static_cast<int>(sets.size())) {
        std::fprintf(stderr, "design-check: %zu certificate(s) failed\n", sets.size() - ok);
        return 1;
    }
    return 0;
}

// Small built-in invariant suites; the full versions live in the test tree.
int cmd_verify() {
    int failures = 0;
    auto report = [&](const char* label, bool pass, const std::string& detail = "") {
        std::printf("[%s] %s%s%s\n", pass ? "ok" : "FAIL", label, detail.empty() ? "" : ": ",
                    detail.c_str());
        if (!pass) ++failures;
    };

    {  // incremental Gram state tracks dense recomputation
        double worst = 0.0, worst_rec = 0.0;
        for (int s = 0; s < 5; ++s) {
            const int dim = 2 + 3 * s;
            Rng rng(derive_seed({17, static_cast<std::uint64_t>(s)}));
            GramState gram(dim, 1.0);
            Eigen::MatrixXd v = Eigen::MatrixXd::Identity(dim, dim);
            Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
            for (int t = 0; t < 400; ++t) {
                Eigen::VectorXd a = Eigen::VectorXd::NullaryExpr(
                    dim, [&](Eigen::Index) { return rng.normal(); });
                a /= std::max(1.0, a.norm());
                const double before = gram.leverage(a);
                const double y = rng.normal();
                gram.update(a, y);
                worst_rec = std::max(worst_rec,
                                     std::abs(gram.leverage(a) - (1.0 - 1.0 / (1.0 + before))));
                v += a * a.transpose();
                b += y * a;
            }
            const Eigen::MatrixXd direct = v.inverse();
            worst = std::max(worst, (gram.v_inv() - direct).cwiseAbs().maxCoeff());
            worst = std::max(worst,
                             (gram.theta_hat() - direct * b).cwiseAbs().maxCoeff());
        }
        report("gram kernel matches dense recomputation", worst <= 1e-8,
               "max drift " + format_double(worst));
        report("leverage shrink recurrence", worst_rec <= 1e-10,
               "max violation " + format_double(worst_rec));
    }

    {  // design certificates on random sets
        bool pass = true;
        for (int s = 0; s < 40 && pass; ++s) {
            Rng rng(derive_seed({29, static_cast<std::uint64_t>(s)}));
            const int dim = 2 + static_cast<int>(rng.below(5));
            const int k = dim + static_cast<int>(rng.below(40));
            const auto arms = sample_unit_ball_arms(dim, k, rng);
            const auto [design, report_] = approx_design(arms);
            pass = report_.max_leverage <= report_.tau &&
                   report_.tau <= design_support_cap(dim) &&
                   design.support_size <= report_.tau;
        }
        report("design certificates on random arm sets", pass);
        bool uniform_ok = true;
        for (int dim = 2; dim <= 6 && uniform_ok; ++dim) {
            ArmSet basis;
            for (int i = 0; i < dim; ++i)
                basis.push_back(0.25 * (i + 1) / dim * Eigen::VectorXd::Unit(dim, i));
            const auto [design, report_] = approx_design(basis);
            uniform_ok = report_.max_leverage == static_cast<double>(dim);
            for (const auto& [idx, w] : design.weights)
                uniform_ok = uniform_ok && w == 1.0 / dim;
        }
        report("scaled orthogonal bases get the uniform design", uniform_ok);
    }

    {  // sampling distribution invariants across the presets
        bool pass = true;
        std::string detail;
        const int presets[3] = {99, 90, 50};
        for (int s = 0; s < 2000 && pass; ++s) {
            Rng rng(derive_seed({31, static_cast<std::uint64_t>(s)}));
            const int dim = 2 + static_cast<int>(rng.below(4));
            const int k = 2 + static_cast<int>(rng.below(6));
            GramState gram(dim, 0.5 + rng.uniform());
            const auto arms = sample_unit_ball_arms(dim, k, rng);
            const int warmup = static_cast<int>(rng.below(30));
            for (int t = 0; t < warmup; ++t)
                gram.update(arms[rng.below(k)], rng.normal());
            LinMedConfig cfg = LinMedConfig::preset(presets[s % 3]);
            cfg.lambda = gram.lambda();
            const auto dist = linmed_distribution(gram, arms, cfg);
            double sum = 0.0, min_p = 1.0;
            for (double p : dist.probs) {
                sum += p;
                min_p = std::min(min_p, p);
            }
            double denom = 0.0;
            for (int i = 0; i < k; ++i) denom += dist.mixture[i] * dist.exp_weights[i];
            pass = std::abs(sum - 1.0) <= 1e-9 &&
                   dist.exp_weights[dist.best_index] == 1.0 && min_p > 0.0 &&
                   denom >= cfg.alpha_emp - 1e-12 && denom <= 1.0 + 1e-12 &&
                   dist.pre_probs[dist.best_index] >= cfg.alpha_emp - 1e-12;
            if (!pass) detail = "failed at state " + std::to_string(s);
        }
        report("sampling distribution invariants (presets)", pass, detail);
    }

    {  // importance weighting recovers the uniform-target value
        const Instance inst = instances::ope(0.0);
        double mean = 0.0;
        bool identity_ok = true;
        const int logs = 200, horizon = 100;
        for (int s = 0; s < logs; ++s) {
            auto policy = LinMedPolicy("linmed-50", 2, LinMedConfig::preset(50));
            const auto records = log_run(policy, inst, horizon, derive_seed({41, (std::uint64_t)s}));
            for (const auto& rec : records)
                identity_ok = identity_ok && rec.propensity > 0.0 && rec.propensity <= 1.0;
            mean += ipw_estimate(records, uniform_target(2)).estimate;
        }
        mean /= logs;
        const double se = 0.45 / std::sqrt(static_cast<double>(logs));  // crude scale bound
        report("ipw estimate centered on the oracle (noiseless logs)",
               std::abs(mean - 0.8) <= 3 * se,
               "mean " + format_double(mean) + " vs oracle 0.8");
        report("log propensities lie in (0, 1]", identity_ok);
    }

    {  // thread count does not change results
        ExperimentConfig cfg;
        cfg.instance = "large_gap";
        cfg.horizon = 400;
        cfg.trials = 6;
        cfg.checkpoints = 12;
        cfg.master_seed = 5;
        cfg.policies = {"linmed-90", "oful"};
        cfg.out = "";
        cfg.threads = 1;
        const auto a = run_experiment(cfg);
        cfg.threads = 4;
        const auto b = run_experiment(cfg);
        std::ostringstream sa, sb;
        write_regret_csv(sa, a);
        write_regret_csv(sb, b);
        report("run results independent of thread count", sa.str() == sb.str());
    }

    if (failures > 0) {
        std::fprintf(stderr, "verify: %d check(s) failed\n", failures);
        return 1;
    }
    std::printf("verify: all checks passed\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear bandit toolkit: design-mixing policies, optimal design, "
                 "off-policy evaluation"};
    app.require_subcommand(1);

    std::string config_path, out_override, csv_path;
    std::uint64_t seed_override = 0, design_seed = 1;
    int threads_override = 0, write_logs = 0;
    int d = 4, k = 50, seeds = 100;
    bool normalize = false;

    auto* run = app.add_subcommand("run", "simulate policies and write regret curves");
    auto* run_config = run->add_option("--config", config_path, "experiment config file");
    run_config->required();
    auto* run_seed = run->add_option("--seed", seed_override, "override master_seed");
    auto* run_threads = run->add_option("--threads", threads_override, "override worker count");
    auto* run_out = run->add_option("--out", out_override, "override output directory");

    auto* ope = app.add_subcommand("ope", "log a policy and evaluate the uniform target");
    auto* ope_config = ope->add_option("--config", config_path, "experiment config file");
    ope_config->required();
    auto* ope_seed = ope->add_option("--seed", seed_override, "override master_seed");
    auto* ope_threads = ope->add_option("--threads", threads_override, "override worker count");
    auto* ope_out = ope->add_option("--out", out_override, "override output directory");
    ope->add_option("--write-logs", write_logs, "also dump the first N trial logs");

    auto* check = app.add_subcommand("design-check", "design certificates on sampled arm sets");
    check->add_option("--d", d, "arm dimension (random sets)");
    check->add_option("--k", k, "arms per set (random sets)");
    check->add_option("--seeds", seeds, "number of random sets");
    check->add_option("--seed", design_seed, "base seed for the random sets");
    check->add_option("--csv", csv_path, "check one arm set loaded from CSV");
    check->add_flag("--normalize", normalize, "rescale CSV rows with norm > 1");

    auto* verify = app.add_subcommand("verify", "run fast built-in invariant checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            apply_overrides(cfg, run_seed, seed_override, run_threads, threads_override,
                            run_out, out_override);
            return cmd_run(cfg);
        }
        if (ope->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            apply_overrides(cfg, ope_seed, seed_override, ope_threads, threads_override,
                            ope_out, out_override);
            return cmd_ope(cfg, write_logs);
        }
        if (check->parsed())
            return cmd_design_check(d, k, seeds, design_seed, csv_path, normalize);
        if (verify->parsed()) return cmd_verify();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
