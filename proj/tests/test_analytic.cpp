#include <doctest.h>

#include <cmath>

#include "cbound/analytic.hpp"
#include "cbound/optimizer.hpp"
#include "cbound/rng.hpp"
#include "test_helpers.hpp"

using namespace cbound;

TEST_CASE("tian-pearl closed forms") {
    const JointDistribution j =
        JointDistribution::validate({{0.3, 0.1}, {0.2, 0.4}});
    const TianPearlBounds b = tian_pearl_bounds(j, {0, 0});
    CHECK(b.lb == doctest::Approx(0.3));
    CHECK(b.ub == doctest::Approx(0.8));

    const JointDistribution j2 =
        JointDistribution::validate({{0.4, 0.25}, {0.1, 0.25}});
    const TianPearlBounds b2 = tian_pearl_bounds(j2, {0, 0});
    CHECK(b2.lb == doctest::Approx(0.4));
    CHECK(b2.ub == doctest::Approx(0.9));
}

TEST_CASE("tian-pearl on a degenerate X marginal") {
    const JointDistribution j =
        JointDistribution::validate({{0.6, 0.0}, {0.4, 0.0}});
    const TianPearlBounds b = tian_pearl_bounds(j, {0, 0});
    CHECK(b.lb == doctest::Approx(0.6));
    CHECK(b.ub == doctest::Approx(0.6));
    CHECK_THROWS_AS(tian_pearl_bounds(j, {1, 0}), Error);
}

TEST_CASE("entropy threshold closed forms") {
    const ThresholdPair t = entropy_threshold(0.5, 0.8);
    // frozen from arbitrary-precision evaluation, cross-checked by the scan
    CHECK(t.lower == doctest::Approx(0.6099865470109875).epsilon(1e-12));
    CHECK(t.upper == doctest::Approx(0.1080315461456).epsilon(1e-10));
    CHECK(t.overall() == t.lower);

    const ThresholdPair sym = entropy_threshold(0.5, 0.5);
    const double expect = binary_entropy(0.25) - 0.5;
    CHECK(sym.lower == doctest::Approx(expect).epsilon(1e-12));
    CHECK(sym.upper == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.31127812445913283).epsilon(1e-12));

    CHECK(entropy_threshold(0.3, 0.0).lower == 0.0);
    CHECK(entropy_threshold(0.3, 1.0).upper == 0.0);

    CHECK_THROWS_AS(entropy_threshold(0.0, 0.5), Error);
    CHECK_THROWS_AS(entropy_threshold(1.0, 0.5), Error);
    CHECK_THROWS_AS(entropy_threshold(0.5, 1.5), Error);
}

TEST_CASE("threshold for query delegates to the closed forms") {
    const JointDistribution j =
        JointDistribution::validate({{0.4, 0.25}, {0.1, 0.25}});
    const ThresholdPair t = threshold_for_query(j, {0, 0});
    const ThresholdPair direct = entropy_threshold(0.5, 0.8);
    CHECK(t.lower == doctest::Approx(direct.lower).epsilon(1e-12));
    CHECK(t.upper == doctest::Approx(direct.upper).epsilon(1e-12));
    CHECK_FALSE(t.heuristic);

    // degenerate conditionals
    const JointDistribution d1 =
        JointDistribution::validate({{0.5, 0.25}, {0.0, 0.25}});
    CHECK(threshold_for_query(d1, {0, 0}).upper == 0.0);   // P(y|x) = 1
    CHECK(threshold_for_query(d1, {0, 1}).lower == 0.0);   // P(y|x) = 0
}

TEST_CASE("threshold heuristic flag only when both axes exceed two states") {
    Rng rng(7);
    const JointDistribution j33 = testutil::random_joint(rng, 3, 3);
    CHECK(threshold_for_query(j33, {0, 0}).heuristic);
    const JointDistribution j23 = testutil::random_joint(rng, 2, 3);
    CHECK_FALSE(threshold_for_query(j23, {0, 0}).heuristic);
    const JointDistribution j32 = testutil::random_joint(rng, 3, 2);
    CHECK_FALSE(threshold_for_query(j32, {0, 0}).heuristic);
}

TEST_CASE("tightness_possible compares against the thresholds") {
    const JointDistribution j =
        JointDistribution::validate({{0.4, 0.25}, {0.1, 0.25}});
    const Tightness t0 = tightness_possible(j, {0, 0}, 0.0);
    CHECK(t0.lower_tighter);
    CHECK(t0.upper_tighter);
    const Tightness t2 = tightness_possible(j, {0, 0}, 2.0);
    CHECK_FALSE(t2.lower_tighter);
    CHECK_FALSE(t2.upper_tighter);
    const Tightness t3 = tightness_possible(j, {0, 0}, 0.3);
    CHECK(t3.lower_tighter);       // 0.3 < 0.610
    CHECK_FALSE(t3.upper_tighter); // 0.3 > 0.108
}

TEST_CASE("tian-pearl gap equals one minus P(x_q)") {
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t nx = 2 + rng.next_u64() % 3;
        const std::size_t ny = 2 + rng.next_u64() % 3;
        const JointDistribution j = testutil::random_joint(rng, nx, ny);
        const Distribution px = marginal_x(j);
        for (std::size_t x = 0; x < nx; ++x) {
            if (px[x] < 1e-9) continue;
            const Query q{x, rng.next_u64() % ny};
            const TianPearlBounds b = tian_pearl_bounds(j, q);
            CHECK(b.ub - b.lb == doctest::Approx(1.0 - px[x]).epsilon(1e-12));
        }
    }
}

TEST_CASE("thresholds bounded by the treatment entropy") {
    Rng rng(13);
    for (int rep = 0; rep < 300; ++rep) {
        const double p = 0.01 + 0.98 * rng.uniform();
        const double a = rng.uniform();
        const ThresholdPair t = entropy_threshold(p, a);
        const double hu = binary_entropy(p);
        CHECK(t.lower <= hu + 1e-9);
        CHECK(t.upper <= hu + 1e-9);
    }
}

TEST_CASE("swap-y symmetry of the closed forms") {
    Rng rng(17);
    for (int rep = 0; rep < 300; ++rep) {
        const double p = 0.01 + 0.98 * rng.uniform();
        const double a = rng.uniform();
        const ThresholdPair t = entropy_threshold(p, a);
        const ThresholdPair s = entropy_threshold(p, 1.0 - a);
        CHECK(t.upper == doctest::Approx(s.lower).epsilon(1e-12));
        CHECK(t.lower == doctest::Approx(s.upper).epsilon(1e-12));
    }
}

TEST_CASE("closed forms match the binary-pair scan oracle") {
    // boundary values on a fine (p, a) grid
    for (int ip = 1; ip < 40; ++ip) {
        for (int ia = 0; ia <= 40; ++ia) {
            const double p = static_cast<double>(ip) / 40.0;
            const double a = static_cast<double>(ia) / 40.0;
            const ThresholdPair t = entropy_threshold(p, a);
            CHECK(t.upper ==
                  doctest::Approx(testutil::binary_pair_mi(p, a, 1.0)).epsilon(1e-9));
            CHECK(t.lower ==
                  doctest::Approx(testutil::binary_pair_mi(p, a, 0.0)).epsilon(1e-9));
        }
    }
    // the scan max over the interior never exceeds the boundary values
    Rng rng(19);
    for (int rep = 0; rep < 40; ++rep) {
        const double p = 0.02 + 0.96 * rng.uniform();
        const double a = rng.uniform();
        const ThresholdPair t = entropy_threshold(p, a);
        const double scan = testutil::binary_pair_mi_scan_max(p, a, 1e-4);
        CHECK(t.overall() == doctest::Approx(scan).epsilon(1e-6));
    }
}

TEST_CASE("thresholds agree with the optimizer's tightening behaviour") {
    Rng rng(23);
    SolverConfig cfg;
    int tested = 0;
    for (int rep = 0; rep < 200 && tested < 40; ++rep) {
        const JointDistribution j = testutil::random_joint(rng, 2, 2);
        const Query q{rng.next_u64() % 2, rng.next_u64() % 2};
        const Distribution px = marginal_x(j);
        if (px[q.x_index] < 0.05 || px[q.x_index] > 0.95) continue;
        const ThresholdPair t = threshold_for_query(j, q);
        if (std::min(t.lower, t.upper) <= 0.05) continue;
        ++tested;

        cfg.theta = t.overall() + 0.01;
        const BoundsResult wide = bounds_counterfactual(j, q, cfg);
        CHECK(std::abs(wide.lb - wide.tp_lb) <= 2e-3);
        CHECK(std::abs(wide.ub - wide.tp_ub) <= 2e-3);

        cfg.theta = 0.5 * std::min(t.lower, t.upper);
        const BoundsResult tight = bounds_counterfactual(j, q, cfg);
        if (t.lower < t.upper) {
            CHECK(tight.lb > tight.tp_lb + 1e-3);
        } else {
            CHECK(tight.ub < tight.tp_ub - 1e-3);
        }
    }
    CHECK(tested >= 20);
}
