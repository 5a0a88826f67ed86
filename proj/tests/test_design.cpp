// Tests for the spanner seed and the greedy leverage-rounding design.
// Certificates are re-verified with independent dense algebra (pseudo-inverse
// of the weighted second-moment matrix), not with the rounding code's own
// internal state.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "linmed/design.hpp"
#include "linmed/rng.hpp"

using namespace linmed;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

ArmSet random_ball_arms(int dim, int k, Rng& rng) {
    ArmSet arms;
    arms.reserve(k);
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd a =
            Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });
        const double n = a.norm();
        if (n > 0.0) a *= std::pow(rng.uniform(), 1.0 / dim) / n;
        arms.push_back(a);
    }
    return arms;
}

// Independent certificate check: max_i a_i' V(pi)^+ a_i within the span,
// with V(pi) built from the normalized weights (its pseudo-inverse already
// carries the 1/tau scaling relative to the count matrix).
double dense_scaled_leverage(const ArmSet& arms, const Design& design, int /*tau*/) {
    const int dim = static_cast<int>(arms.front().size());
    Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& [idx, w] : design.weights)
        moment += w * arms[idx] * arms[idx].transpose();
    const Eigen::MatrixXd pinv =
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(moment).pseudoInverse();
    double worst = 0.0;
    for (const auto& a : arms) worst = std::max(worst, a.dot(pinv * a));
    return worst;
}

}  // namespace

TEST_CASE("spanner returns every index when the set is small") {
    ArmSet arms = {vec({1.0, 0.0}), vec({0.5, 0.5}), vec({0.0, 0.3})};
    REQUIRE(bh_spanner(arms) == std::vector<int>{0, 1, 2});
}

TEST_CASE("spanner rejects degenerate input") {
    REQUIRE_THROWS_AS(bh_spanner(ArmSet{}), std::invalid_argument);
    ArmSet zeros(5, Eigen::VectorXd::Zero(3));
    REQUIRE_THROWS_AS(bh_spanner(zeros), std::invalid_argument);
}

TEST_CASE("spanner collapses identical arms to a single index") {
    ArmSet arms(10, vec({0.6, 0.8}));
    const auto picked = bh_spanner(arms);
    REQUIRE(picked.size() == 1);
}

TEST_CASE("spanner selection spans the arm span") {
    Rng rng(derive_seed({21}));
    for (int rep = 0; rep < 25; ++rep) {
        const int dim = 2 + static_cast<int>(rng.below(5));
        ArmSet arms = random_ball_arms(dim, 3 * dim + 4, rng);
        // Guarantee full rank so the expected span dimension is known.
        for (int i = 0; i < dim; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
            e(i) = 0.9;
            arms.push_back(e);
        }
        const auto picked = bh_spanner(arms);
        REQUIRE(!picked.empty());
        REQUIRE(std::set<int>(picked.begin(), picked.end()).size() == picked.size());
        Eigen::MatrixXd chosen(dim, static_cast<int>(picked.size()));
        for (std::size_t j = 0; j < picked.size(); ++j) chosen.col(j) = arms[picked[j]];
        REQUIRE(Eigen::FullPivLU<Eigen::MatrixXd>(chosen).rank() == dim);
    }
}

TEST_CASE("spanner recovers spanning arms when all arms lie off the origin") {
    // Every arm has the same first coordinate, so pairwise differences never
    // expose that direction; the completion pass has to supply it.
    ArmSet arms;
    for (int j = 0; j < 9; ++j)
        arms.push_back(vec({0.5, 0.4 * std::sin(0.7 * j), 0.4 * std::cos(0.7 * j)}));
    const auto picked = bh_spanner(arms);
    Eigen::MatrixXd chosen(3, static_cast<int>(picked.size()));
    for (std::size_t j = 0; j < picked.size(); ++j) chosen.col(j) = arms[picked[j]];
    REQUIRE(Eigen::FullPivLU<Eigen::MatrixXd>(chosen).rank() == 3);
}

TEST_CASE("two orthogonal unit arms get the uniform design with certificate 2") {
    ArmSet arms = {vec({1.0, 0.0}), vec({0.0, 1.0})};
    const auto [design, report] = approx_design(arms);
    REQUIRE(design.support_size == 2);
    REQUIRE(design.weight(0) == 0.5);
    REQUIRE(design.weight(1) == 0.5);
    REQUIRE(report.max_leverage == 2.0);
    REQUIRE(report.tau == 2);
    REQUIRE(report.effective_rank == 2);
}

TEST_CASE("arm scaling does not change the design weights") {
    ArmSet arms = {vec({0.3, 0.0}), vec({0.0, 0.9})};
    const auto [design, report] = approx_design(arms);
    REQUIRE(design.weight(0) == 0.5);
    REQUIRE(design.weight(1) == 0.5);
    REQUIRE(report.max_leverage == 2.0);

    // Power-of-two rescaling is exact in floating point, so the whole greedy
    // trajectory must be bit-identical.
    Rng rng(derive_seed({22}));
    ArmSet base = random_ball_arms(4, 30, rng);
    const auto [d1, r1] = approx_design(base);
    ArmSet scaled = base;
    for (auto& a : scaled) a *= 0.25;
    const auto [d2, r2] = approx_design(scaled);
    REQUIRE(d1.weights == d2.weights);
    REQUIRE(r1.tau == r2.tau);
    REQUIRE(r1.max_leverage == r2.max_leverage);
}

TEST_CASE("a single arm receives the whole design mass") {
    ArmSet arms = {vec({0.6, 0.8})};
    const auto [design, report] = approx_design(arms);
    REQUIRE(design.support_size == 1);
    REQUIRE(design.weight(0) == 1.0);
    REQUIRE(report.max_leverage == 1.0);
    REQUIRE(report.effective_rank == 1);
}

TEST_CASE("positively scaled orthogonal bases yield the exact uniform design") {
    for (int dim = 1; dim <= 8; ++dim) {
        ArmSet arms;
        for (int i = 0; i < dim; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
            e(i) = 0.25 * (i + 1) / dim + 0.125;
            arms.push_back(e);
        }
        const auto [design, report] = approx_design(arms);
        REQUIRE(design.support_size == dim);
        for (int i = 0; i < dim; ++i) REQUIRE(design.weight(i) == 1.0 / dim);
        REQUIRE(report.max_leverage == static_cast<double>(dim));
        REQUIRE(report.tau == dim);
    }
}

TEST_CASE("rotated orthogonal bases keep a tight certificate") {
    // Leverages here sit within an ulp of the stopping threshold, so the
    // exact count split is not pinned down; the certificate still is.
    const double c = std::cos(0.4), s = std::sin(0.4);
    ArmSet arms = {vec({0.7 * c, 0.7 * s}), vec({-0.5 * s, 0.5 * c})};
    const auto [design, report] = approx_design(arms);
    REQUIRE(design.support_size == 2);
    REQUIRE(design.weight(0) >= 0.25);
    REQUIRE(design.weight(1) >= 0.25);
    REQUIRE(report.tau <= 4);
    REQUIRE(report.max_leverage <= static_cast<double>(report.tau));
    REQUIRE(dense_scaled_leverage(arms, design, report.tau) <= report.tau * (1.0 + 1e-9));
}

TEST_CASE("certificates hold on random arm sets") {
    Rng rng(derive_seed({23}));
    for (int rep = 0; rep < 50; ++rep) {
        const int dim = 2 + static_cast<int>(rng.below(7));
        const int k = dim + static_cast<int>(rng.below(60));
        ArmSet arms = random_ball_arms(dim, k, rng);
        const auto [design, report] = approx_design(arms);

        REQUIRE(report.max_leverage <= static_cast<double>(report.tau));
        REQUIRE(report.tau <= design_support_cap(dim));
        REQUIRE(design.support_size <= report.tau);
        double sum = 0.0;
        for (const auto& [idx, w] : design.weights) {
            REQUIRE(idx >= 0);
            REQUIRE(idx < k);
            REQUIRE(w > 0.0);
            sum += w;
        }
        REQUIRE(std::abs(sum - 1.0) <= 1e-9);
        REQUIRE(dense_scaled_leverage(arms, design, report.tau) <=
                report.tau * (1.0 + 1e-9));
    }
}

TEST_CASE("rank-deficient arm sets are handled in their span") {
    // Four arms inside a 2-dimensional subspace of R^4.
    Rng rng(derive_seed({24}));
    Eigen::VectorXd u = vec({0.5, 0.5, 0.5, 0.5});
    Eigen::VectorXd w = vec({0.5, -0.5, 0.5, -0.5});
    ArmSet arms;
    for (int i = 0; i < 6; ++i) {
        const double a = rng.normal(), b = rng.normal();
        Eigen::VectorXd x = a * u + b * w;
        x /= std::max(1.0, x.norm());
        arms.push_back(x);
    }
    const auto [design, report] = approx_design(arms);
    REQUIRE(report.effective_rank == 2);
    REQUIRE(report.max_leverage <= static_cast<double>(report.tau));
    REQUIRE(dense_scaled_leverage(arms, design, report.tau) <= report.tau * (1.0 + 1e-9));
}

TEST_CASE("design rejects degenerate input") {
    REQUIRE_THROWS_AS(approx_design(ArmSet{}), std::invalid_argument);
    ArmSet zeros(3, Eigen::VectorXd::Zero(2));
    REQUIRE_THROWS_AS(approx_design(zeros), std::invalid_argument);
}

TEST_CASE("augmented design with unit factors matches the plain design") {
    Rng rng(derive_seed({25}));
    ArmSet arms = random_ball_arms(3, 20, rng);
    std::vector<double> ones(arms.size(), 1.0);
    const auto [plain, plain_report] = approx_design(arms);
    for (int version : {0, 1}) {
        const auto [aug, aug_report] = design_augmented(arms, ones, version);
        REQUIRE(aug.weights == plain.weights);
        REQUIRE(aug_report.tau == plain_report.tau);
        REQUIRE(aug_report.max_leverage == plain_report.max_leverage);
    }
}

TEST_CASE("augmented design version 1 drops arms below the 1/e threshold") {
    ArmSet arms = {vec({1.0, 0.0}), vec({0.0, 1.0})};
    std::vector<double> f = {1.0, 0.2};  // 0.2 < 1/e
    const auto [design, report] = design_augmented(arms, f, 1);
    REQUIRE(design.support_size == 1);
    REQUIRE(design.weight(0) == 1.0);
    REQUIRE(design.weight(1) == 0.0);

    // Just above the threshold the arm stays in, unscaled.
    f[1] = 0.5;
    const auto [both, both_report] = design_augmented(arms, f, 1);
    REQUIRE(both.support_size == 2);
    REQUIRE(both.weight(1) == 0.5);
    REQUIRE(both_report.max_leverage == 2.0);
}

TEST_CASE("augmented design version 0 keeps tiny factors out and rescales the rest") {
    ArmSet arms = {vec({1.0, 0.0}), vec({0.0, 1.0}), vec({0.5, 0.5})};
    std::vector<double> f = {1.0, 1e-13, 0.25};
    const auto [design, report] = design_augmented(arms, f, 0);
    REQUIRE(design.weight(1) == 0.0);  // below the 1e-12 floor
    REQUIRE(design.weight(0) > 0.0);
    // Certificate still applies to the kept, rescaled arms.
    REQUIRE(report.max_leverage <= static_cast<double>(report.tau));
}

TEST_CASE("augmented design validates factors and version") {
    ArmSet arms = {vec({1.0, 0.0}), vec({0.0, 1.0})};
    std::vector<double> f = {1.0, 0.5};
    REQUIRE_THROWS_AS(design_augmented(arms, {1.0}, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(design_augmented(arms, {1.0, 0.0}, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(design_augmented(arms, {1.0, 1.5}, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(design_augmented(arms, f, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(design_augmented(arms, {1e-13, 1e-13}, 0), std::invalid_argument);
}

TEST_CASE("support cap grows like d log d") {
    REQUIRE(design_support_cap(1) == 16);
    REQUIRE(design_support_cap(2) >= 32);
    REQUIRE(design_support_cap(10) >= 160);
}
