// policies.hpp - bandit policies over finite arm sets.
//
// All policies implement Policy: select() returns the chosen arm index with
// the sampling probability (and the full distribution when it exists in
// closed form); update() absorbs one observed (arm, reward) pair. Feedback
// may be delayed; updates must arrive in the order decisions were made.
#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linmed/design.hpp"
#include "linmed/gram.hpp"
#include "linmed/rng.hpp"

namespace linmed {

// Closed-form per-round sampling distribution together with the quantities
// it was assembled from. linmednopt fills only probs / exp_weights / gaps /
// pre_probs / best_index; exp2 fills probs and best_index.
struct ActionDistribution {
    std::vector<double> probs;       // final sampling probabilities
    std::vector<double> exp_weights; // exponential gap weights, in (0, 1]
    std::vector<double> mixture;     // design + best-arm + uniform mixture
    std::vector<double> pre_probs;   // reweighted mixture before the
                                     // high-leverage override
    std::vector<double> gaps;        // estimated mean gaps, clamped at 0
    std::vector<int> high_leverage;  // arms with leverage > 1
    int best_index = 0;              // empirically best arm
};

struct PolicyDecision {
    int arm_index = 0;
    std::optional<double> propensity;
    std::optional<ActionDistribution> distribution;
};

struct LinMedConfig {
    double alpha_emp = 0.5;   // mass pinned on the empirically best arm
    double alpha_opt = 0.25;  // mass given to the optimal-design component
    int design_version = 0;   // 0: rescaled arms, 1: thresholded arms
    double lambda = 1.0;
    ConfidenceParams confidence;
    // Fixed temperature for the exponential weights. Unset (the default)
    // uses the growing confidence radius beta_t(delta_t); a constant such
    // as the noise variance makes the weights far more aggressive, which
    // the arm-count study needs to expose the ablation's weakness.
    std::optional<double> temperature;

    // Named presets: 99 -> (0.99, 0.005), 90 -> (0.90, 0.05),
    // 50 -> (0.50, 0.25).
    static LinMedConfig preset(int percent) {
        LinMedConfig cfg;
        switch (percent) {
            case 99: cfg.alpha_emp = 0.99; cfg.alpha_opt = 0.005; break;
            case 90: cfg.alpha_emp = 0.90; cfg.alpha_opt = 0.05; break;
            case 50: cfg.alpha_emp = 0.50; cfg.alpha_opt = 0.25; break;
            default: throw std::invalid_argument("LinMedConfig: unknown preset");
        }
        return cfg;
    }

    void validate() const {
        if (!(alpha_emp > 0.0) || alpha_emp >= 1.0)
            throw std::invalid_argument("LinMedConfig: alpha_emp must lie in (0, 1)");
        if (!(alpha_opt > 0.0) || alpha_opt >= 1.0)
            throw std::invalid_argument("LinMedConfig: alpha_opt must lie in (0, 1)");
        if (!(alpha_emp + alpha_opt < 1.0))
            throw std::invalid_argument("LinMedConfig: alpha_emp + alpha_opt must be < 1");
        if (design_version != 0 && design_version != 1)
            throw std::invalid_argument("LinMedConfig: design_version must be 0 or 1");
        if (!(lambda > 0.0))
            throw std::invalid_argument("LinMedConfig: lambda must be > 0");
        if (!(confidence.sigma > 0.0) || !(confidence.s_bound > 0.0))
            throw std::invalid_argument("LinMedConfig: sigma and S must be > 0");
        if (temperature && !(*temperature > 0.0))
            throw std::invalid_argument("LinMedConfig: temperature must be > 0");
    }
};

namespace detail {

inline void check_arms(const GramState& gram, const ArmSet& arms) {
    if (arms.empty()) throw std::invalid_argument("policy: arm set is empty");
    for (const auto& a : arms)
        if (a.size() != gram.dim())
            throw std::invalid_argument("policy: arm dimension mismatch");
}

inline int argmax_lowest(const std::vector<double>& x) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(x.size()); ++i)
        if (x[i] > x[best]) best = i;
    return best;
}

// Exponential gap weight exp(-gap^2 / (scale * denom)). A denominator at or
// below 1e-15 is treated as the 0/0 case (weight 1); exponents below -700
// are floored at the smallest positive normal double to keep full support.
inline double gap_weight(double gap, double denom, double scale) {
    if (denom <= 1e-15) return 1.0;
    const double expo = -(gap * gap) / (scale * denom);
    if (expo < -700.0) return DBL_MIN;
    return std::exp(expo);
}

inline int sample_index(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace detail

// Closed-form sampling distribution of the design-mixing policy.
inline ActionDistribution linmed_distribution(const GramState& gram, const ArmSet& arms,
                                              const LinMedConfig& cfg) {
    cfg.validate();
    detail::check_arms(gram, arms);
    const int k = static_cast<int>(arms.size());

    std::vector<double> scores(k);
    for (int i = 0; i < k; ++i) scores[i] = gram.theta_hat().dot(arms[i]);

    ActionDistribution dist;
    dist.best_index = detail::argmax_lowest(scores);
    const Arm& best = arms[dist.best_index];

    const double beta = cfg.temperature ? *cfg.temperature : gram.confidence_radius(cfg.confidence);
    dist.gaps.resize(k);
    dist.exp_weights.resize(k);
    for (int i = 0; i < k; ++i) {
        dist.gaps[i] = std::max(0.0, scores[dist.best_index] - scores[i]);
        dist.exp_weights[i] = detail::gap_weight(dist.gaps[i], gram.mahalanobis_gap(best, arms[i]), beta);
    }

    const auto [design, report] = design_augmented(arms, dist.exp_weights, cfg.design_version);
    (void)report;
    const double uniform = (1.0 - cfg.alpha_emp - cfg.alpha_opt) / k;
    dist.mixture.resize(k);
    for (int i = 0; i < k; ++i) {
        dist.mixture[i] = cfg.alpha_opt * design.weight(i) + uniform +
                          (i == dist.best_index ? cfg.alpha_emp : 0.0);
    }

    double denom = 0.0;
    for (int i = 0; i < k; ++i) denom += dist.mixture[i] * dist.exp_weights[i];
    dist.pre_probs.resize(k);
    for (int i = 0; i < k; ++i)
        dist.pre_probs[i] = dist.mixture[i] * dist.exp_weights[i] / denom;

    for (int i = 0; i < k; ++i)
        if (gram.leverage(arms[i]) > 1.0) dist.high_leverage.push_back(i);

    dist.probs = dist.pre_probs;
    if (!dist.high_leverage.empty()) {
        const int forced = dist.high_leverage.front();
        for (int i = 0; i < k; ++i) dist.probs[i] *= 0.5;
        dist.probs[forced] += 0.5;
    }
    return dist;
}

// Ablated variant: per-arm leverage in the exponent denominator, plain
// normalization, no design and no high-leverage override.
inline ActionDistribution linmednopt_distribution(const GramState& gram, const ArmSet& arms,
                                                  const LinMedConfig& cfg) {
    cfg.validate();
    detail::check_arms(gram, arms);
    const int k = static_cast<int>(arms.size());

    std::vector<double> scores(k);
    for (int i = 0; i < k; ++i) scores[i] = gram.theta_hat().dot(arms[i]);

    ActionDistribution dist;
    dist.best_index = detail::argmax_lowest(scores);

    const double beta = cfg.temperature ? *cfg.temperature : gram.confidence_radius(cfg.confidence);
    dist.gaps.resize(k);
    dist.exp_weights.resize(k);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        dist.gaps[i] = std::max(0.0, scores[dist.best_index] - scores[i]);
        dist.exp_weights[i] = detail::gap_weight(dist.gaps[i], gram.leverage(arms[i]), beta);
        total += dist.exp_weights[i];
    }
    dist.probs.resize(k);
    for (int i = 0; i < k; ++i) dist.probs[i] = dist.exp_weights[i] / total;
    dist.pre_probs = dist.probs;
    return dist;
}

class Policy {
public:
    virtual ~Policy() = default;
    virtual const std::string& name() const = 0;
    virtual PolicyDecision select(const ArmSet& arms, Rng& rng) = 0;
    virtual void update(const Arm& arm, double reward) = 0;
};

class LinMedPolicy : public Policy {
public:
    LinMedPolicy(std::string name, int dim, LinMedConfig cfg)
        : name_(std::move(name)), cfg_(std::move(cfg)), gram_(dim, cfg_.lambda) {
        cfg_.validate();
    }

    const std::string& name() const override { return name_; }
    const GramState& gram() const { return gram_; }

    PolicyDecision select(const ArmSet& arms, Rng& rng) override {
        PolicyDecision decision;
        decision.distribution = linmed_distribution(gram_, arms, cfg_);
        decision.arm_index = detail::sample_index(decision.distribution->probs, rng);
        decision.propensity = decision.distribution->probs[decision.arm_index];
        return decision;
    }

    void update(const Arm& arm, double reward) override { gram_.update(arm, reward); }

private:
    std::string name_;
    LinMedConfig cfg_;
    GramState gram_;
};

class LinMedNoptPolicy : public Policy {
public:
    LinMedNoptPolicy(std::string name, int dim, LinMedConfig cfg)
        : name_(std::move(name)), cfg_(std::move(cfg)), gram_(dim, cfg_.lambda) {
        cfg_.validate();
    }

    const std::string& name() const override { return name_; }

    PolicyDecision select(const ArmSet& arms, Rng& rng) override {
        PolicyDecision decision;
        decision.distribution = linmednopt_distribution(gram_, arms, cfg_);
        decision.arm_index = detail::sample_index(decision.distribution->probs, rng);
        decision.propensity = decision.distribution->probs[decision.arm_index];
        return decision;
    }

    void update(const Arm& arm, double reward) override { gram_.update(arm, reward); }

private:
    std::string name_;
    LinMedConfig cfg_;
    GramState gram_;
};

// Exponential-weights policy on reward estimates with a fixed exploration
// design. The arm set is fixed at the first select() call; the default
// tuning needs the horizon. The per-round covariance factor required to
// project delayed feedback is queued at decision time and consumed FIFO by
// update().
class Exp2Policy : public Policy {
public:
    Exp2Policy(std::string name, int dim, std::int64_t horizon,
               std::optional<double> gamma = std::nullopt,
               std::optional<double> eta = std::nullopt)
        : name_(std::move(name)), dim_(dim), horizon_(horizon),
          gamma_override_(gamma), eta_override_(eta),
          cum_estimate_(Eigen::VectorXd::Zero(dim)) {
        if (horizon < 1) throw std::invalid_argument("Exp2Policy: horizon must be >= 1");
    }

    const std::string& name() const override { return name_; }
    double gamma() const { return gamma_; }
    double eta() const { return eta_; }
    const std::vector<double>& exploration_design() const { return exploration_; }

    PolicyDecision select(const ArmSet& arms, Rng& rng) override {
        if (exploration_.empty()) initialize(arms);
        const int k = static_cast<int>(arms.size());
        if (k != static_cast<int>(exploration_.size()))
            throw std::invalid_argument("Exp2Policy: arm set size changed between rounds");

        // Stable softmax over the cumulative reward estimates.
        std::vector<double> logits(k);
        double max_logit = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < k; ++i) {
            logits[i] = eta_ * arms[i].dot(cum_estimate_);
            max_logit = std::max(max_logit, logits[i]);
        }
        PolicyDecision decision;
        ActionDistribution dist;
        dist.best_index = detail::argmax_lowest(logits);
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
            logits[i] = std::exp(logits[i] - max_logit);
            total += logits[i];
        }
        dist.probs.resize(k);
        for (int i = 0; i < k; ++i)
            dist.probs[i] = gamma_ * exploration_[i] + (1.0 - gamma_) * logits[i] / total;

        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim_, dim_);
        for (int i = 0; i < k; ++i)
            cov.noalias() += dist.probs[i] * arms[i] * arms[i].transpose();
        pending_.push_back(std::move(cov));

        decision.arm_index = detail::sample_index(dist.probs, rng);
        decision.propensity = dist.probs[decision.arm_index];
        decision.distribution = std::move(dist);
        return decision;
    }

    void update(const Arm& arm, double reward) override {
        if (pending_.empty())
            throw InternalError("Exp2Policy: update without matching select");
        const Eigen::MatrixXd cov = std::move(pending_.front());
        pending_.pop_front();
        // Least-norm solve handles a singular covariance (rank-deficient
        // support of the sampling distribution).
        cum_estimate_ += Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(cov)
                             .solve((reward * arm).eval());
    }

private:
    void initialize(const ArmSet& arms) {
        const int k = static_cast<int>(arms.size());
        auto [design, report] = approx_design(arms);
        exploration_.assign(k, 0.0);
        for (const auto& [idx, w] : design.weights) exploration_[idx] = w;
        const double g = report.max_leverage;
        gamma_ = gamma_override_.value_or(
            std::sqrt(g * g * std::log(static_cast<double>(k)) /
                      ((2.0 * g + dim_) * static_cast<double>(horizon_))));
        if (!(gamma_ > 0.0) || gamma_ >= 1.0)
            throw std::invalid_argument("Exp2Policy: gamma must lie in (0, 1)");
        eta_ = eta_override_.value_or(gamma_ / g);
        if (!(eta_ > 0.0))
            throw std::invalid_argument("Exp2Policy: eta must be > 0");
    }

    std::string name_;
    int dim_;
    std::int64_t horizon_;
    std::optional<double> gamma_override_, eta_override_;
    double gamma_ = 0.0, eta_ = 0.0;
    std::vector<double> exploration_;
    Eigen::VectorXd cum_estimate_;
    std::deque<Eigen::MatrixXd> pending_;
};

// Deterministic optimism: argmax of score + sqrt(beta) * ||a||_{V^-1}.
class OfulPolicy : public Policy {
public:
    OfulPolicy(std::string name, int dim, double lambda, ConfidenceParams confidence)
        : name_(std::move(name)), confidence_(std::move(confidence)), gram_(dim, lambda) {}

    const std::string& name() const override { return name_; }

    PolicyDecision select(const ArmSet& arms, Rng&) override {
        detail::check_arms(gram_, arms);
        const double beta = gram_.confidence_radius(confidence_);
        std::vector<double> index(arms.size());
        for (size_t i = 0; i < arms.size(); ++i) {
            index[i] = gram_.theta_hat().dot(arms[i]) +
                       std::sqrt(beta * gram_.leverage(arms[i]));
        }
        PolicyDecision decision;
        decision.arm_index = detail::argmax_lowest(index);
        decision.propensity = 1.0;
        return decision;
    }

    void update(const Arm& arm, double reward) override { gram_.update(arm, reward); }

private:
    std::string name_;
    ConfidenceParams confidence_;
    GramState gram_;
};

enum class LinTsVariant { kFreq, kBayes };

// Posterior-style sampling: theta drawn from N(theta_hat, c * V^{-1}).
// The bayes variant uses the noise variance guess, c = sigma^2. The freq
// variant oversamples that posterior by the 2d variance factor frequentist
// analyses of linear Thompson sampling call for, c = 2 * d * sigma^2, so
// its exploration scales with the noise guess and widens with dimension.
// No closed-form propensity; use lints_propensity_mc to estimate.
class LinTsPolicy : public Policy {
public:
    LinTsPolicy(std::string name, int dim, double lambda, LinTsVariant variant,
                ConfidenceParams confidence)
        : name_(std::move(name)), variant_(variant), confidence_(std::move(confidence)),
          gram_(dim, lambda) {}

    const std::string& name() const override { return name_; }
    const GramState& gram() const { return gram_; }

    double covariance_scale() const {
        const double sigma_sq = confidence_.sigma * confidence_.sigma;
        return variant_ == LinTsVariant::kFreq ? 2.0 * gram_.dim() * sigma_sq
                                               : sigma_sq;
    }

    // Factors the current state once so repeated draws stay cheap.
    class ParameterSampler {
    public:
        explicit ParameterSampler(const LinTsPolicy& policy)
            : theta_(policy.gram_.theta_hat()), scale_(std::sqrt(policy.covariance_scale())),
              llt_(policy.gram_.v()) {
            if (llt_.info() != Eigen::Success)
                throw InternalError("LinTsPolicy: Gram matrix lost positive definiteness");
        }

        Eigen::VectorXd draw(Rng& rng) const {
            Eigen::VectorXd z(theta_.size());
            for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
            // V = L L^T, so L^{-T} z has covariance V^{-1}.
            llt_.matrixU().solveInPlace(z);
            return theta_ + scale_ * z;
        }

    private:
        Eigen::VectorXd theta_;
        double scale_;
        Eigen::LLT<Eigen::MatrixXd> llt_;
    };

    ParameterSampler sampler() const { return ParameterSampler(*this); }

    Eigen::VectorXd sample_parameter(Rng& rng) const { return sampler().draw(rng); }

    PolicyDecision select(const ArmSet& arms, Rng& rng) override {
        detail::check_arms(gram_, arms);
        const Eigen::VectorXd theta = sample_parameter(rng);
        std::vector<double> scores(arms.size());
        for (size_t i = 0; i < arms.size(); ++i) scores[i] = theta.dot(arms[i]);
        PolicyDecision decision;
        decision.arm_index = detail::argmax_lowest(scores);
        return decision;
    }

    void update(const Arm& arm, double reward) override { gram_.update(arm, reward); }

private:
    std::string name_;
    LinTsVariant variant_;
    ConfidenceParams confidence_;
    GramState gram_;
};

// Empirical argmax frequencies over draws of the sampled parameter; entries
// can be zero at small draw counts.
inline std::vector<double> lints_propensity_mc(const LinTsPolicy& policy, const ArmSet& arms,
                                               std::int64_t draws, Rng& rng) {
    if (draws < 1) throw std::invalid_argument("lints_propensity_mc: draws must be >= 1");
    const auto sampler = policy.sampler();
    std::vector<std::int64_t> counts(arms.size(), 0);
    std::vector<double> scores(arms.size());
    for (std::int64_t m = 0; m < draws; ++m) {
        const Eigen::VectorXd theta = sampler.draw(rng);
        for (size_t i = 0; i < arms.size(); ++i) scores[i] = theta.dot(arms[i]);
        counts[detail::argmax_lowest(scores)] += 1;
    }
    std::vector<double> freq(arms.size());
    for (size_t i = 0; i < arms.size(); ++i)
        freq[i] = static_cast<double>(counts[i]) / static_cast<double>(draws);
    return freq;
}

// LinTS wrapper that estimates each round's propensity by Monte Carlo before
// drawing the actual decision; used to produce importance-weighted logs.
class LinTsLoggedPolicy : public Policy {
public:
    LinTsLoggedPolicy(std::string name, int dim, double lambda, LinTsVariant variant,
                      ConfidenceParams confidence, std::int64_t mc_draws)
        : inner_(std::move(name), dim, lambda, variant, std::move(confidence)),
          mc_draws_(mc_draws) {}

    const std::string& name() const override { return inner_.name(); }

    PolicyDecision select(const ArmSet& arms, Rng& rng) override {
        const std::vector<double> freq = lints_propensity_mc(inner_, arms, mc_draws_, rng);
        PolicyDecision decision = inner_.select(arms, rng);
        decision.propensity = freq[decision.arm_index];
        return decision;
    }

    void update(const Arm& arm, double reward) override { inner_.update(arm, reward); }

private:
    LinTsPolicy inner_;
    std::int64_t mc_draws_;
};

}  // namespace linmed
