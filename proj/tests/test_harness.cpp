// Tests for config parsing, instance/policy construction, checkpointing, and
// the seeded experiment loops (including scheduling independence).
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "linmed/harness.hpp"

using namespace linmed;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("checkpoints are increasing, start at 1 or later, and end at the horizon") {
    const auto rounds = checkpoint_rounds(1000, 100);
    REQUIRE(!rounds.empty());
    REQUIRE(rounds.front() >= 1);
    REQUIRE(rounds.back() == 1000);
    REQUIRE(rounds.size() <= 100);
    for (std::size_t i = 1; i < rounds.size(); ++i) REQUIRE(rounds[i] > rounds[i - 1]);

    REQUIRE(checkpoint_rounds(1, 10) == std::vector<std::int64_t>{1});
    const auto dense = checkpoint_rounds(50, 100);  // more requested than rounds
    REQUIRE(dense.size() <= 50);
    REQUIRE(dense.back() == 50);
    REQUIRE(checkpoint_rounds(7, 1).back() == 7);
}

TEST_CASE("config serialization round-trips exactly") {
    const ExperimentConfig defaults;
    REQUIRE(serialize_config(parse_config_text("")) == serialize_config(defaults));

    ExperimentConfig cfg;
    cfg.instance = "unit_ball";
    cfg.sigma_star_sq = 2.5;
    cfg.epsilon = 0.02;
    cfg.k = 17;
    cfg.d = 5;
    cfg.instance_seed = 99;
    cfg.arms_csv = "/tmp/some_arms.csv";
    cfg.normalize = true;
    cfg.theta_star = {0.6, 0.8};
    cfg.horizon = 12345;
    cfg.trials = 7;
    cfg.master_seed = 424242;
    cfg.delay = 3;
    cfg.checkpoints = 25;
    cfg.threads = 3;
    cfg.out = "/tmp/linmed_out";
    cfg.policies = {"linmed-50", "oful", "exp2"};
    cfg.sigma_sq = 0.1;
    cfg.s_bound = 2.0;
    cfg.lambda = 0.5;
    cfg.alpha_emp = 0.8;
    cfg.alpha_opt = 0.1;
    cfg.design_version = 1;
    cfg.mc_samples = 500;
    cfg.exp2_gamma = 0.01;

    const std::string text = serialize_config(cfg);
    REQUIRE(serialize_config(parse_config_text(text)) == text);

    const ExperimentConfig parsed = parse_config_text(text);
    REQUIRE(parsed.policies == cfg.policies);
    REQUIRE(parsed.theta_star == cfg.theta_star);
    REQUIRE(parsed.exp2_gamma.has_value());
    REQUIRE(parsed.exp2_gamma.value() == 0.01);
    REQUIRE(!parsed.exp2_eta.has_value());
    REQUIRE(parsed.normalize);
    REQUIRE(parsed.sigma_star_sq == 2.5);
}

TEST_CASE("config parser flags bad input with its line") {
    REQUIRE_THROWS_MATCHES(parse_config_text("bogus_key = 1\n"), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("bogus_key")));
    REQUIRE_THROWS_MATCHES(parse_config_text("horizon = 10\nhorizon = 20\n"), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("duplicate")));
    REQUIRE_THROWS_AS(parse_config_text("horizon = soon\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("sigma_sq = much\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("horizon\n"), ConfigError);

    // Comments and the auto sentinel parse cleanly.
    const ExperimentConfig ok = parse_config_text(
        "# full-line comment\nhorizon = 42   # trailing comment\nexp2_gamma = auto\n");
    REQUIRE(ok.horizon == 42);
    REQUIRE(!ok.exp2_gamma.has_value());

    REQUIRE_THROWS_MATCHES(load_config("/tmp/linmed_missing_config.toml"), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("linmed_missing_config")));
}

TEST_CASE("config validation rejects out-of-range settings") {
    ExperimentConfig cfg;
    cfg.horizon = 0;
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.trials = 0;
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.delay = -1;
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.checkpoints = 0;
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.policies.clear();
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.sigma_sq = 0.0;
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.mc_samples = 0;
    REQUIRE_THROWS_AS(validate_config(cfg), ConfigError);
    REQUIRE_NOTHROW(validate_config(ExperimentConfig{}));
}

TEST_CASE("make_instance resolves names and applies the noise override") {
    ExperimentConfig cfg;
    cfg.instance = "k_dependency";
    cfg.k = 8;
    REQUIRE(make_instance(cfg).fixed_arms.size() == 8);
    REQUIRE(make_instance(cfg).sigma_star_sq == 3.0);
    cfg.sigma_star_sq = 0.5;
    REQUIRE(make_instance(cfg).sigma_star_sq == 0.5);

    cfg = ExperimentConfig{};
    cfg.instance = "nope";
    REQUIRE_THROWS_MATCHES(make_instance(cfg), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("unit_ball")));

    cfg = ExperimentConfig{};
    cfg.instance = "csv";
    REQUIRE_THROWS_AS(make_instance(cfg), ConfigError);  // no arms_csv

    const std::string path = "/tmp/linmed_test_make_instance.csv";
    {
        std::ofstream out(path);
        out << "0.5,0.5\n1,0\n";
    }
    cfg.arms_csv = path;
    const Instance inst = make_instance(cfg);
    REQUIRE(inst.dim == 2);
    REQUIRE(inst.theta_star(0) == 1.0);  // default parameter: first unit vector
    REQUIRE(inst.sigma_star_sq == 1.0);
    cfg.theta_star = {0.0, 1.0, 0.0};
    REQUIRE_THROWS_AS(make_instance(cfg), ConfigError);
    cfg.theta_star = {0.0, 1.0};
    REQUIRE(make_instance(cfg).theta_star(1) == 1.0);
    std::remove(path.c_str());
}

TEST_CASE("make_policy covers every advertised name and rejects the rest") {
    const ExperimentConfig cfg;
    for (const auto& name : known_policy_names()) {
        const auto policy = make_policy(name, cfg, 2, 100);
        REQUIRE(policy->name() == name);
    }
    REQUIRE_THROWS_MATCHES(make_policy("linucb", cfg, 2, 100), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("linmed-90")));

    // Logged construction attaches Monte Carlo propensities to lints.
    ExperimentConfig mc = cfg;
    mc.mc_samples = 50;
    auto logged = make_policy("lints-bayes", mc, 2, 100, true);
    Rng rng(derive_seed({71}));
    const ArmSet arms = {instances::vec2(1.0, 0.0), instances::vec2(0.0, 1.0)};
    REQUIRE(logged->select(arms, rng).propensity.has_value());
    auto plain = make_policy("lints-bayes", mc, 2, 100);
    REQUIRE(!plain->select(arms, rng).propensity.has_value());
}

TEST_CASE("a single-arm instance accumulates exactly zero regret") {
    ExperimentConfig cfg;
    cfg.instance = "unit_ball";
    cfg.d = 2;
    cfg.k = 1;
    cfg.horizon = 50;
    cfg.trials = 4;
    cfg.checkpoints = 10;
    cfg.policies = {"linmed-90", "oful"};
    cfg.out = "";
    const auto curves = run_experiment(cfg);
    REQUIRE(curves.size() == 2);
    for (const auto& curve : curves) {
        REQUIRE(curve.trials == 4);
        REQUIRE(curve.rounds == checkpoint_rounds(50, 10));
        for (double m : curve.mean) REQUIRE(m == 0.0);
        for (double s : curve.std_error) REQUIRE(s == 0.0);
    }
}

TEST_CASE("mean cumulative regret is nondecreasing along the curve") {
    ExperimentConfig cfg;
    cfg.horizon = 400;
    cfg.trials = 6;
    cfg.checkpoints = 12;
    cfg.policies = {"linmed-50", "oful", "lints-bayes"};
    cfg.out = "";
    for (const auto& curve : run_experiment(cfg)) {
        for (std::size_t i = 1; i < curve.mean.size(); ++i)
            REQUIRE(curve.mean[i] >= curve.mean[i - 1] - 1e-12);
    }
}

TEST_CASE("experiment output is identical across reruns and thread counts") {
    ExperimentConfig cfg;
    cfg.horizon = 300;
    cfg.trials = 6;
    cfg.checkpoints = 15;
    cfg.master_seed = 777;
    cfg.policies = {"linmed-90", "exp2", "lints-freq"};
    cfg.out = "";

    cfg.threads = 1;
    const auto serial = run_experiment(cfg);
    cfg.threads = 3;
    const auto parallel = run_experiment(cfg);

    std::ostringstream a, b;
    write_regret_csv(a, serial);
    write_regret_csv(b, parallel);
    REQUIRE(a.str() == b.str());

    cfg.threads = 3;
    const auto rerun = run_experiment(cfg);
    std::ostringstream c;
    write_regret_csv(c, rerun);
    REQUIRE(c.str() == b.str());
}

TEST_CASE("experiment and ope runs write their CSV artifacts") {
    const std::string dir = "/tmp/linmed_test_artifacts";
    std::filesystem::remove_all(dir);

    ExperimentConfig cfg;
    cfg.horizon = 60;
    cfg.trials = 3;
    cfg.checkpoints = 6;
    cfg.policies = {"linmed-90"};
    cfg.out = dir;
    run_experiment(cfg);
    const std::string regret = slurp(std::filesystem::path(dir) / "regret.csv");
    REQUIRE(regret.rfind("policy,t,mean_regret,stderr,trials\n", 0) == 0);
    REQUIRE(regret.find("linmed-90,60,") != std::string::npos);

    ExperimentConfig ope_cfg;
    ope_cfg.instance = "ope";
    ope_cfg.horizon = 80;
    ope_cfg.trials = 10;
    ope_cfg.policies = {"linmed-50"};
    ope_cfg.out = dir;
    const auto outcome = run_ope(ope_cfg);
    REQUIRE(outcome.estimates.size() == 10);
    REQUIRE(outcome.oracle == Catch::Approx(0.8).margin(1e-12));
    const std::string est = slurp(std::filesystem::path(dir) / "ope_estimates.csv");
    REQUIRE(est.rfind("trial,estimate\n", 0) == 0);
    const std::string summary = slurp(std::filesystem::path(dir) / "ope_summary.csv");
    REQUIRE(summary.rfind("policy,horizon,trials,mean,std,oracle\n", 0) == 0);
    REQUIRE(summary.find("linmed-50,80,10,") != std::string::npos);

    std::filesystem::remove_all(dir);
}

TEST_CASE("ope runs demand one fixed-arm logging policy") {
    ExperimentConfig cfg;
    cfg.instance = "ope";
    cfg.policies = {"linmed-50", "oful"};
    cfg.out = "";
    REQUIRE_THROWS_AS(run_ope(cfg), ConfigError);

    cfg.policies = {"linmed-50"};
    cfg.instance = "unit_ball";
    REQUIRE_THROWS_AS(run_ope(cfg), ConfigError);
}

TEST_CASE("short ope runs land near the oracle and reproduce exactly") {
    ExperimentConfig cfg;
    cfg.instance = "ope";
    cfg.horizon = 300;
    cfg.trials = 50;
    cfg.policies = {"linmed-50"};
    cfg.master_seed = 5;
    cfg.threads = 2;
    cfg.out = "";
    const auto a = run_ope(cfg);
    REQUIRE(std::abs(a.mean - 0.8) < 0.1);
    REQUIRE(a.stddev < 0.2);

    cfg.threads = 1;
    const auto b = run_ope(cfg);
    REQUIRE(a.estimates == b.estimates);
    REQUIRE(a.mean == b.mean);
}
