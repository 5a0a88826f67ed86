// quickstart.cpp - minimal library tour: run one design-mixing policy on a
// two-arm instance and print the regret curve.
#include <cstdio>

#include "linmed/linmed.hpp"

int main() {
    linmed::ExperimentConfig cfg;
    cfg.instance = "large_gap";
    cfg.horizon = 2000;
    cfg.trials = 8;
    cfg.master_seed = 7;
    cfg.checkpoints = 10;
    cfg.policies = {"linmed-90", "oful"};
    cfg.out = "";  // keep this demo file-free

    const auto curves = linmed::run_experiment(cfg);
    for (const auto& curve : curves) {
        std::printf("%s (mean cumulative regret over %d trials)\n", curve.policy.c_str(),
                    curve.trials);
        for (std::size_t i = 0; i < curve.rounds.size(); ++i)
            std::printf("  t=%6lld  regret=%8.2f +- %.2f\n",
                        static_cast<long long>(curve.rounds[i]), curve.mean[i],
                        curve.std_error[i]);
    }
    return 0;
}
