#include "cbound/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cbound {

namespace {

constexpr double kZeroSlack = 1e-12;
constexpr double kStrictMargin = 1e-9;

void check_query(const JointDistribution& j, const Query& q) {
    if (q.x_index >= j.nx() || q.y_index >= j.ny()) {
        throw Error(ErrorCode::OutOfRange, "query index out of range");
    }
}

double p_of_xq(const JointDistribution& j, const Query& q) {
    double px = 0.0;
    for (std::size_t y = 0; y < j.ny(); ++y) px += j.p(y, q.x_index);
    if (px <= kZeroSlack) {
        throw Error(ErrorCode::ZeroConditioningEvent, "query with P(x_q) = 0");
    }
    return px;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

TianPearlBounds tian_pearl_bounds(const JointDistribution& j, const Query& q) {
    check_query(j, q);
    const double px = p_of_xq(j, q);
    const double pyx = j.p(q.y_index, q.x_index);
    TianPearlBounds b;
    b.lb = clamp01(pyx);
    b.ub = clamp01(pyx + 1.0 - px);
    return b;
}

ThresholdPair entropy_threshold(double p_xq, double p_yp_given_xq) {
    if (p_xq <= kZeroSlack || p_xq >= 1.0 - kZeroSlack) {
        std::ostringstream os;
        os << "P(x_q) = " << p_xq << " must lie strictly inside (0,1)";
        throw Error(ErrorCode::OutOfRange, os.str());
    }
    if (p_yp_given_xq < -kZeroSlack || p_yp_given_xq > 1.0 + kZeroSlack) {
        throw Error(ErrorCode::OutOfRange, "conditional probability outside [0,1]");
    }
    const double p = p_xq;
    const double a = clamp01(p_yp_given_xq);
    const double hba = binary_entropy(a);
    ThresholdPair t;
    t.upper = binary_entropy((1.0 - a) * p) - p * hba;
    t.lower = binary_entropy(a * p) - p * hba;
    // The expressions are mutual informations of a feasible binary pair, so
    // any negativity is rounding noise.
    t.upper = t.upper < 0.0 ? 0.0 : t.upper;
    t.lower = t.lower < 0.0 ? 0.0 : t.lower;
    return t;
}

ThresholdPair threshold_for_query(const JointDistribution& j, const Query& q) {
    check_query(j, q);
    const double px = p_of_xq(j, q);
    const double alpha = j.p(q.y_index, q.x_index) / px;
    ThresholdPair t;
    if (px >= 1.0 - kZeroSlack) {
        // X degenerate at x_q: no other column exists, nothing to tighten.
        t.lower = t.upper = 0.0;
    } else {
        t = entropy_threshold(px, alpha);
    }
    t.heuristic = j.nx() > 2 && j.ny() > 2;
    return t;
}

Tightness tightness_possible(const JointDistribution& j, const Query& q, double theta) {
    if (theta < 0.0) {
        throw Error(ErrorCode::OutOfRange, "theta must be nonnegative");
    }
    const ThresholdPair t = threshold_for_query(j, q);
    Tightness res;
    res.lower_tighter = theta < t.lower - kStrictMargin;
    res.upper_tighter = theta < t.upper - kStrictMargin;
    return res;
}

}  // namespace cbound
