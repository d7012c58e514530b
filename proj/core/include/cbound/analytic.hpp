#pragma once

#include <cstddef>

#include "cbound/dist.hpp"

namespace cbound {

/// Causal query: effect of do(X = x_q) on Y = y_p.
struct Query {
    std::size_t x_index = 0;
    std::size_t y_index = 0;
};

struct TianPearlBounds {
    double lb = 0.0;
    double ub = 1.0;
};

/// Entropy budgets below which the constrained lower / upper bound is
/// strictly tighter than the Tian-Pearl reference.
struct ThresholdPair {
    double lower = 0.0;
    double upper = 0.0;
    /// Set when both |X| > 2 and |Y| > 2: the closed forms still apply to the
    /// solver's feasible set, but the tightness guarantee is only proven for
    /// binary treatment or outcome.
    bool heuristic = false;

    double overall() const { return lower > upper ? lower : upper; }
};

struct Tightness {
    bool lower_tighter = false;
    bool upper_tighter = false;
};

/// Closed-form assumption-free bounds:
///   P(y_p, x_q) <= P(y_p | do(x_q)) <= P(y_p, x_q) + 1 - P(x_q).
TianPearlBounds tian_pearl_bounds(const JointDistribution& j, const Query& q);

/// Thresholds from the binary pair construction with P(u_0) = p_xq and
/// P(v_0|u_0) = p_yp_given_xq:
///   upper = H_b((1-a) p) - p H_b(a),  lower = H_b(a p) - p H_b(a).
ThresholdPair entropy_threshold(double p_xq, double p_yp_given_xq);

ThresholdPair threshold_for_query(const JointDistribution& j, const Query& q);

/// Whether a budget theta admits a strictly tighter bound on each side.
Tightness tightness_possible(const JointDistribution& j, const Query& q, double theta);

}  // namespace cbound
