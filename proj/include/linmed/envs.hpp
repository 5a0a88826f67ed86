// envs.hpp - synthetic bandit instances, reward generation, feedback delay.
#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linmed/errors.hpp"
#include "linmed/gram.hpp"
#include "linmed/rng.hpp"

namespace linmed {

struct StepOutcome {
    double reward = 0.0;
    double instant_regret = 0.0;
};

// A bandit environment: hidden parameter, noise level, and either a fixed
// arm set or a per-trial arm generator (seeded, deterministic).
struct Instance {
    std::string name;
    int dim = 0;
    Eigen::VectorXd theta_star;
    double sigma_star_sq = 1.0;
    ArmSet fixed_arms;
    std::function<ArmSet(std::uint64_t)> arm_generator;

    ArmSet realize_arms(std::uint64_t trial_seed) const {
        ArmSet arms = arm_generator ? arm_generator(trial_seed) : fixed_arms;
        validate_arms(arms, dim);
        return arms;
    }

    double best_mean(const ArmSet& arms) const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : arms) best = std::max(best, theta_star.dot(a));
        return best;
    }

    static void validate_arms(const ArmSet& arms, int dim) {
        if (arms.empty()) throw std::invalid_argument("instance: arm set is empty");
        for (const auto& a : arms) {
            if (a.size() != dim) throw std::invalid_argument("instance: arm dimension mismatch");
            if (!a.allFinite()) throw std::invalid_argument("instance: arm has non-finite entries");
            if (a.norm() > 1.0 + 1e-9)
                throw std::invalid_argument("instance: arm norm exceeds 1");
        }
    }
};

// Draws the reward for one pull and reports the exact instantaneous regret
// against the best arm of the given set.
inline StepOutcome step(const Instance& inst, const ArmSet& arms, int arm_index, Rng& rng) {
    if (arm_index < 0 || arm_index >= static_cast<int>(arms.size()))
        throw std::invalid_argument("step: arm index out of range");
    if (!(inst.sigma_star_sq >= 0.0))
        throw std::invalid_argument("step: noise variance must be >= 0");
    const double mean = inst.theta_star.dot(arms[arm_index]);
    StepOutcome out;
    out.reward = mean + rng.normal(0.0, std::sqrt(inst.sigma_star_sq));
    out.instant_regret = inst.best_mean(arms) - mean;
    return out;
}

// K points drawn uniformly from the unit ball in the given dimension.
inline ArmSet sample_unit_ball_arms(int dim, int k, Rng& rng) {
    ArmSet arms;
    arms.reserve(k);
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd a =
            Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });
        a.normalize();
        a *= std::pow(rng.uniform(), 1.0 / dim);
        arms.push_back(std::move(a));
    }
    return arms;
}

namespace instances {

inline Eigen::VectorXd vec2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

// Two orthogonal arms with a unit mean gap.
inline Instance large_gap(double sigma_star_sq = 1.0) {
    Instance inst;
    inst.name = "large_gap";
    inst.dim = 2;
    inst.theta_star = vec2(1.0, 0.0);
    inst.sigma_star_sq = sigma_star_sq;
    inst.fixed_arms = {vec2(1.0, 0.0), vec2(0.0, 1.0)};
    return inst;
}

// A near-optimal third arm that tempts pure optimism into over-pulling the
// informative orthogonal arm too rarely.
inline Instance end_of_optimism(double epsilon, double sigma_star_sq = 0.01) {
    if (!(epsilon > 0.0) || !(epsilon < 0.5))
        throw std::invalid_argument("end_of_optimism: epsilon must lie in (0, 0.5)");
    Instance inst;
    inst.name = "end_of_optimism";
    inst.dim = 2;
    inst.theta_star = vec2(1.0, 0.0);
    inst.sigma_star_sq = sigma_star_sq;
    inst.fixed_arms = {vec2(1.0, 0.0), vec2(0.0, 1.0), vec2(1.0 - epsilon, 2.0 * epsilon)};
    return inst;
}

// One optimal arm plus k-1 identical copies of the suboptimal arm.
inline Instance k_dependency(int k, double sigma_star_sq = 3.0) {
    if (k < 2) throw std::invalid_argument("k_dependency: k must be >= 2");
    Instance inst;
    inst.name = "k_dependency";
    inst.dim = 2;
    inst.theta_star = vec2(1.0, 0.0);
    inst.sigma_star_sq = sigma_star_sq;
    inst.fixed_arms.push_back(vec2(1.0, 0.0));
    for (int i = 1; i < k; ++i) inst.fixed_arms.push_back(vec2(0.0, 1.0));
    return inst;
}

// Fresh arms per trial, uniform in the unit ball; the hidden parameter is a
// fixed draw from the unit sphere determined by `seed`.
inline Instance unit_ball(int dim, int k, std::uint64_t seed, double sigma_star_sq = 1.0) {
    if (dim < 1) throw std::invalid_argument("unit_ball: dim must be >= 1");
    if (k < 1) throw std::invalid_argument("unit_ball: k must be >= 1");
    Instance inst;
    inst.name = "unit_ball";
    inst.dim = dim;
    inst.sigma_star_sq = sigma_star_sq;
    Rng rng(derive_seed({seed, 0x7468657461ULL}));
    inst.theta_star = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });
    inst.theta_star.normalize();
    inst.arm_generator = [dim, k, seed](std::uint64_t trial_seed) {
        Rng arm_rng(derive_seed({seed, trial_seed}));
        return sample_unit_ball_arms(dim, k, arm_rng);
    };
    return inst;
}

// Two-arm logging instance whose uniform-target value is 0.8.
inline Instance ope(double sigma_star_sq = 0.1) {
    Instance inst;
    inst.name = "ope";
    inst.dim = 2;
    inst.theta_star = vec2(1.0, 0.0);
    inst.sigma_star_sq = sigma_star_sq;
    inst.fixed_arms = {vec2(1.0, 0.0), vec2(0.6, 0.8)};
    return inst;
}

}  // namespace instances

// FIFO feedback delay: an observation made at round t is handed to the
// learner at the end of round t + delay. flush() drains whatever is still
// pending once the horizon is reached.
class DelayBuffer {
public:
    explicit DelayBuffer(std::int64_t delay) : delay_(delay) {
        if (delay < 0) throw std::invalid_argument("DelayBuffer: delay must be >= 0");
    }

    std::int64_t delay() const { return delay_; }
    std::size_t pending() const { return items_.size(); }

    void push(std::int64_t round, Arm arm, double reward) {
        items_.push_back({round + delay_, std::move(arm), reward});
    }

    template <typename F>
    void release_due(std::int64_t round, F&& deliver) {
        while (!items_.empty() && items_.front().release_round <= round) {
            deliver(items_.front().arm, items_.front().reward);
            items_.pop_front();
        }
    }

    template <typename F>
    void flush(F&& deliver) {
        while (!items_.empty()) {
            deliver(items_.front().arm, items_.front().reward);
            items_.pop_front();
        }
    }

private:
    struct Item {
        std::int64_t release_round;
        Arm arm;
        double reward;
    };
    std::int64_t delay_;
    std::deque<Item> items_;
};

// Loads one arm per CSV row. A first row that fails numeric parsing is
// treated as a header. Rows with norm above 1 + 1e-9 are rejected with
// their row number unless `normalize` is set, in which case they are
// rescaled to unit norm.
inline ArmSet load_arms_csv(const std::string& path, bool normalize = false) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_arms_csv: cannot open '" + path + "'");

    auto parse_cells = [](const std::string& line, std::vector<double>& out) {
        out.clear();
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto first = cell.find_first_not_of(" \t\r");
            if (first == std::string::npos) return false;
            const auto last = cell.find_last_not_of(" \t\r");
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell.substr(first, last - first + 1), &used);
            } catch (const std::exception&) {
                return false;
            }
            if (used != last - first + 1) return false;
            out.push_back(value);
        }
        return !out.empty();
    };

    ArmSet arms;
    std::vector<double> cells;
    std::string line;
    int row = 0;
    int content_rows = 0;
    Eigen::Index dim = -1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++content_rows;
        if (!parse_cells(line, cells)) {
            if (content_rows == 1) continue;  // header row
            throw ParseError("load_arms_csv: row " + std::to_string(row) +
                             " has a non-numeric field");
        }
        if (dim < 0) dim = static_cast<Eigen::Index>(cells.size());
        if (static_cast<Eigen::Index>(cells.size()) != dim)
            throw SchemaError("load_arms_csv: row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " fields, expected " +
                              std::to_string(dim));
        Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(cells.data(), dim);
        if (!a.allFinite())
            throw SchemaError("load_arms_csv: row " + std::to_string(row) +
                              " has a non-finite value");
        const double norm = a.norm();
        if (norm > 1.0 + 1e-9) {
            if (!normalize)
                throw SchemaError("load_arms_csv: row " + std::to_string(row) + " has norm " +
                                  std::to_string(norm) +
                                  " > 1; pass normalize to rescale");
            a /= norm;
        }
        arms.push_back(std::move(a));
    }
    if (arms.empty()) throw SchemaError("load_arms_csv: no arm rows in '" + path + "'");
    return arms;
}

}  // namespace linmed
