// gram.hpp - regularized Gram matrix state for online ridge regression.
//
// GramState maintains V_t = lambda*I + sum_s a_s a_s^T together with its
// inverse, the ridge estimate theta_hat = V_t^{-1} sum_s y_s a_s, and
// log det(V_t) - log det(V_0). The inverse is advanced with rank-one
// Sherman-Morrison updates and refactorized from V every `refactor_stride`
// updates to keep ||V * V_inv - I||_max below 1e-8 indefinitely.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "linmed/errors.hpp"

namespace linmed {

using Arm = Eigen::VectorXd;
using ArmSet = std::vector<Eigen::VectorXd>;

// Inputs to the confidence-radius computation.
//   sigma: subgaussian-scale guess for the reward noise (standard deviation).
//   s_bound: bound on ||theta*||_2.
//   delta: failure-probability schedule, evaluated at the state's update
//          count; defaults to 1/(t+1).
struct ConfidenceParams {
    double sigma = 1.0;
    double s_bound = 1.0;
    std::function<double(std::int64_t)> delta = [](std::int64_t t) {
        return 1.0 / static_cast<double>(t + 1);
    };
};

class GramState {
public:
    GramState(int dim, double lambda, int refactor_stride = 512)
        : dim_(dim), lambda_(lambda), refactor_stride_(refactor_stride) {
        if (dim < 1) throw std::invalid_argument("GramState: dim must be >= 1");
        if (!(lambda > 0.0)) throw std::invalid_argument("GramState: lambda must be > 0");
        if (refactor_stride < 1) throw std::invalid_argument("GramState: refactor stride must be >= 1");
        v_ = lambda * Eigen::MatrixXd::Identity(dim, dim);
        v_inv_ = (1.0 / lambda) * Eigen::MatrixXd::Identity(dim, dim);
        b_ = Eigen::VectorXd::Zero(dim);
        theta_hat_ = Eigen::VectorXd::Zero(dim);
    }

    int dim() const { return dim_; }
    double lambda() const { return lambda_; }
    std::int64_t updates() const { return t_; }
    const Eigen::MatrixXd& v() const { return v_; }
    const Eigen::MatrixXd& v_inv() const { return v_inv_; }
    const Eigen::VectorXd& theta_hat() const { return theta_hat_; }
    double log_det_ratio() const { return log_det_ratio_; }

    // Absorbs one (arm, reward) observation. A zero arm leaves everything but
    // the update counter unchanged.
    void update(const Arm& arm, double reward) {
        check_dim(arm);
        const Eigen::VectorXd u = v_inv_ * arm;
        const double lev = std::max(0.0, arm.dot(u));
        v_.noalias() += arm * arm.transpose();
        v_inv_.noalias() -= (u * u.transpose()) / (1.0 + lev);
        v_inv_ = 0.5 * (v_inv_ + v_inv_.transpose().eval());
        log_det_ratio_ += std::log1p(lev);
        b_.noalias() += reward * arm;
        ++t_;
        if (t_ % refactor_stride_ == 0) refactorize();
        theta_hat_.noalias() = v_inv_ * b_;
    }

    // ||arm||^2 w.r.t. V^{-1}, clamped to be nonnegative.
    double leverage(const Arm& arm) const {
        check_dim(arm);
        return std::max(0.0, arm.dot(v_inv_ * arm));
    }

    // ||a - b||^2 w.r.t. V^{-1}; exactly zero for coordinate-wise equal arms.
    double mahalanobis_gap(const Arm& a, const Arm& b) const {
        check_dim(a);
        check_dim(b);
        if (a == b) return 0.0;
        const Eigen::VectorXd diff = a - b;
        return std::max(0.0, diff.dot(v_inv_ * diff));
    }

    // Squared confidence radius at the current update count:
    //   (sigma * sqrt(log_det_ratio + 2 log(1/delta_t)) + sqrt(lambda) * S)^2
    double confidence_radius(const ConfidenceParams& params) const {
        const double delta = params.delta(t_);
        if (!(delta > 0.0) || delta > 1.0)
            throw std::invalid_argument("confidence_radius: delta must lie in (0, 1]");
        const double inner = std::max(0.0, log_det_ratio_ + 2.0 * std::log(1.0 / delta));
        const double root = params.sigma * std::sqrt(inner) +
                            std::sqrt(lambda_) * params.s_bound;
        return root * root;
    }

    // Recomputes the inverse and log-det from V. Called periodically by
    // update(); exposed for tests.
    void refactorize() {
        Eigen::LLT<Eigen::MatrixXd> llt(v_);
        if (llt.info() != Eigen::Success)
            throw InternalError("GramState: V lost positive definiteness");
        v_inv_ = llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
        v_inv_ = 0.5 * (v_inv_ + v_inv_.transpose().eval());
        double log_det = 0.0;
        const auto& l = llt.matrixLLT();
        for (int i = 0; i < dim_; ++i) log_det += 2.0 * std::log(l(i, i));
        log_det_ratio_ = std::max(0.0, log_det - dim_ * std::log(lambda_));
    }

private:
    void check_dim(const Arm& arm) const {
        if (arm.size() != dim_)
            throw std::invalid_argument("GramState: arm dimension mismatch");
    }

    int dim_;
    double lambda_;
    int refactor_stride_;
    std::int64_t t_ = 0;
    Eigen::MatrixXd v_;
    Eigen::MatrixXd v_inv_;
    Eigen::VectorXd b_;
    Eigen::VectorXd theta_hat_;
    double log_det_ratio_ = 0.0;
};

}  // namespace linmed
