// design.hpp - approximate G-optimal design over a finite arm set.
//
// approx_design seeds integer counts with a barycentric-spanner-style arm
// selection (bh_spanner), then greedily adds copies of the arm with the
// largest leverage until every arm's leverage w.r.t. the unnormalized count
// Gram matrix is at most 1. Normalizing counts by their total tau yields a
// design pi with certificate
//   max_a ||a||^2_{V(pi)^{-1}} <= tau  and  tau <= ceil(16 d (1 + ln d)).
// Rank-deficient arm sets are handled by working in an orthonormal basis of
// the arm span; all leverages are then taken within that subspace.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "linmed/errors.hpp"
#include "linmed/gram.hpp"

namespace linmed {

struct Design {
    std::map<int, double> weights;  // arm index -> probability, support only
    int support_size = 0;

    double weight(int index) const {
        auto it = weights.find(index);
        return it == weights.end() ? 0.0 : it->second;
    }
};

struct DesignReport {
    double max_leverage = 0.0;  // max_a ||a||^2 w.r.t. V(pi)^{-1}, in-span
    int tau = 0;                // total rounding count
    int effective_rank = 0;     // dimension of the arm span
};

// Hard ceiling on the rounding count; exceeding it means the greedy loop
// failed to converge and is reported as an internal error.
inline int design_support_cap(int dim) {
    return static_cast<int>(std::ceil(16.0 * dim * (1.0 + std::log(static_cast<double>(dim)))));
}

namespace detail {

inline void check_arm_set(const ArmSet& arms) {
    if (arms.empty()) throw std::invalid_argument("design: arm set is empty");
    const auto dim = arms.front().size();
    for (const auto& a : arms)
        if (a.size() != dim) throw std::invalid_argument("design: inconsistent arm dimensions");
}

// Orthonormal basis of span(arms) by modified Gram-Schmidt over arms in
// index order. Directions with residual below 1e-10 * max_norm are treated
// as already spanned.
inline Eigen::MatrixXd span_basis(const ArmSet& arms) {
    const int dim = static_cast<int>(arms.front().size());
    double max_norm = 0.0;
    for (const auto& a : arms) max_norm = std::max(max_norm, a.norm());
    const double tol = 1e-10 * max_norm;
    Eigen::MatrixXd basis(dim, std::min<int>(dim, static_cast<int>(arms.size())));
    int rank = 0;
    for (const auto& a : arms) {
        Eigen::VectorXd w = a;
        for (int j = 0; j < rank; ++j) w -= basis.col(j).dot(w) * basis.col(j);
        const double n = w.norm();
        if (n > tol && rank < basis.cols()) {
            basis.col(rank) = w / n;
            ++rank;
        }
        if (rank == dim) break;
    }
    return basis.leftCols(rank);
}

}  // namespace detail

// Selects a small subset of arm indices whose span equals the arm-set span.
// Walks the standard basis directions, orthogonalizing each against the span
// of the already-selected extreme-pair differences, and picks the arms
// extremizing the inner product along the residual direction. A completion
// pass then covers any span directions the pair walk missed (possible when
// all arms lie on an affine hyperplane off the origin).
inline std::vector<int> bh_spanner(const ArmSet& arms) {
    detail::check_arm_set(arms);
    const int k = static_cast<int>(arms.size());
    const int dim = static_cast<int>(arms.front().size());

    double max_norm = 0.0;
    for (const auto& a : arms) max_norm = std::max(max_norm, a.norm());
    if (max_norm == 0.0) throw std::invalid_argument("bh_spanner: all arms are zero");

    std::vector<int> selected;
    auto select = [&](int idx) {
        if (std::find(selected.begin(), selected.end(), idx) == selected.end())
            selected.push_back(idx);
    };

    if (k <= 2 * dim) {
        for (int i = 0; i < k; ++i) selected.push_back(i);
        return selected;
    }

    std::vector<Eigen::VectorXd> dir_basis;  // orthonormalized pair differences
    auto residual = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd w = x;
        for (const auto& u : dir_basis) w -= u.dot(w) * u;
        return w;
    };

    for (int i = 0; i < dim; ++i) {
        Eigen::VectorXd b = residual(Eigen::VectorXd::Unit(dim, i));
        if (b.norm() <= 1e-10) continue;  // direction already spanned
        int p = 0, q = 0;
        double best = arms[0].dot(b), worst = best;
        for (int j = 1; j < k; ++j) {
            const double s = arms[j].dot(b);
            if (s > best) { best = s; p = j; }
            if (s < worst) { worst = s; q = j; }
        }
        if (!(best > worst)) continue;  // no extent along b
        select(p);
        select(q);
        Eigen::VectorXd w = residual(arms[p] - arms[q]);
        const double n = w.norm();
        if (n > 1e-10 * (arms[p] - arms[q]).norm()) dir_basis.push_back(w / n);
    }

    // Completion: make sure the selected arms span the full arm span, so a
    // count-based Gram over them is invertible in reduced coordinates.
    const double tol = 1e-10 * max_norm;
    std::vector<Eigen::VectorXd> arm_basis;
    auto arm_residual_norm = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd w = x;
        for (const auto& u : arm_basis) w -= u.dot(w) * u;
        return w.norm();
    };
    auto grow_arm_basis = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd w = x;
        for (const auto& u : arm_basis) w -= u.dot(w) * u;
        const double n = w.norm();
        if (n > tol) arm_basis.push_back(w / n);
    };
    for (int idx : selected) grow_arm_basis(arms[idx]);
    const int full_rank = static_cast<int>(detail::span_basis(arms).cols());
    while (static_cast<int>(arm_basis.size()) < full_rank) {
        int best_idx = -1;
        double best_res = tol;
        for (int j = 0; j < k; ++j) {
            const double r = arm_residual_norm(arms[j]);
            if (r > best_res) { best_res = r; best_idx = j; }
        }
        if (best_idx < 0) break;
        select(best_idx);
        grow_arm_basis(arms[best_idx]);
    }

    std::sort(selected.begin(), selected.end());
    return selected;
}

// Greedy rounding with spanner seeding. Returns the design and its
// certificate values.
inline std::pair<Design, DesignReport> approx_design(const ArmSet& arms) {
    detail::check_arm_set(arms);
    const int k = static_cast<int>(arms.size());
    const int dim = static_cast<int>(arms.front().size());

    const Eigen::MatrixXd basis = detail::span_basis(arms);
    const int rank = static_cast<int>(basis.cols());
    if (rank == 0) throw std::invalid_argument("approx_design: all arms are zero");

    // Arm coordinates in the span basis, one column per arm.
    Eigen::MatrixXd reduced(rank, k);
    for (int j = 0; j < k; ++j) reduced.col(j) = basis.transpose() * arms[j];

    std::vector<int> counts(k, 0);
    Eigen::MatrixXd vbar = Eigen::MatrixXd::Zero(rank, rank);
    for (int idx : bh_spanner(arms)) {
        counts[idx] += 1;
        vbar.noalias() += reduced.col(idx) * reduced.col(idx).transpose();
    }
    int tau = 0;
    for (int c : counts) tau += c;

    const int cap = design_support_cap(dim);
    Eigen::VectorXd lev(k);
    // Leverage of arm j under the count matrix is ||L^{-1} r_j||^2 where
    // L is the Cholesky factor of vbar. Factoring fresh every iteration
    // keeps the values exact, and the forward solve below uses true
    // divisions rather than a cached reciprocal so that an axis-scaled
    // orthogonal basis yields y = e_j and a leverage of exactly 1.0.
    Eigen::VectorXd y(rank);
    auto leverages = [&]() {
        Eigen::LLT<Eigen::MatrixXd> llt(vbar);
        if (llt.info() != Eigen::Success)
            throw InternalError("approx_design: design Gram matrix is singular");
        const Eigen::MatrixXd& lmat = llt.matrixLLT();  // lower triangle is L
        for (int j = 0; j < k; ++j) {
            for (int i = 0; i < rank; ++i) {
                double acc = reduced(i, j);
                for (int m = 0; m < i; ++m) acc -= lmat(i, m) * y(m);
                y(i) = acc / lmat(i, i);
            }
            lev(j) = y.squaredNorm();
        }
        int arg = 0;
        for (int j = 1; j < k; ++j)
            if (lev(j) > lev(arg)) arg = j;
        return arg;
    };
    int arg = leverages();
    while (lev(arg) > 1.0) {
        counts[arg] += 1;
        ++tau;
        if (tau > cap)
            throw InternalError("approx_design: rounding count exceeded cap " +
                                std::to_string(cap));
        vbar.noalias() += reduced.col(arg) * reduced.col(arg).transpose();
        arg = leverages();
    }
    const double max_lev = lev(arg);

    Design design;
    for (int j = 0; j < k; ++j)
        if (counts[j] > 0) design.weights[j] = static_cast<double>(counts[j]) / tau;
    design.support_size = static_cast<int>(design.weights.size());

    DesignReport report;
    report.tau = tau;
    report.max_leverage = tau * max_lev;
    report.effective_rank = rank;
    return {design, report};
}

// Design over arms reweighted by per-arm factors in (0, 1].
//   version 0: rescale each arm by sqrt(f); arms with f < 1e-12 are dropped
//              from the design input (they keep zero design weight).
//   version 1: keep only arms with f >= 1/e, unscaled.
inline std::pair<Design, DesignReport> design_augmented(const ArmSet& arms,
                                                        const std::vector<double>& f,
                                                        int version) {
    detail::check_arm_set(arms);
    if (f.size() != arms.size())
        throw std::invalid_argument("design_augmented: factor count mismatch");
    for (double v : f)
        if (!(v > 0.0) || v > 1.0)
            throw std::invalid_argument("design_augmented: factors must lie in (0, 1]");
    if (version != 0 && version != 1)
        throw std::invalid_argument("design_augmented: version must be 0 or 1");

    const double keep_threshold = version == 0 ? 1e-12 : std::exp(-1.0);
    std::vector<int> kept;
    ArmSet input;
    for (int j = 0; j < static_cast<int>(arms.size()); ++j) {
        if (f[j] < keep_threshold) continue;
        kept.push_back(j);
        input.push_back(version == 0 ? (std::sqrt(f[j]) * arms[j]).eval() : arms[j]);
    }
    if (input.empty())
        throw std::invalid_argument("design_augmented: no arm passes the factor threshold");

    auto [inner, report] = approx_design(input);
    Design design;
    for (const auto& [local, w] : inner.weights) design.weights[kept[local]] = w;
    design.support_size = inner.support_size;
    return {design, report};
}

}  // namespace linmed
