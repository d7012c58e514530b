#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "cbound/optimizer.hpp"

namespace cbound {

namespace {

constexpr double kZero = 1e-15;

struct ScanState {
    std::int64_t K = 0;
    std::size_t m = 0;
    std::size_t nf = 0;                 // scanned free columns
    std::vector<std::size_t> free_col;  // joint column index per scanned column
    std::vector<double> wfree;          // P(x_j) per scanned column
    std::vector<double> pin;            // column q values
    double wq = 0.0;
    std::size_t p = 0;                  // target row
    double pinned_obj = 0.0;            // w_q * pin_p
    double pinned_xlogx = 0.0;          // sum_i w_q pin_i ln pin_i
    std::vector<double> log_count;      // ln(c) for c in [1, K]
    double log_K = 0.0;
    double theta_eff = 0.0;             // theta + grid-rounding slack
    double scale = 1.0;                 // log-base conversion
};

struct ScanBest {
    double lo_obj = std::numeric_limits<double>::infinity();
    double hi_obj = -std::numeric_limits<double>::infinity();
    double lo_mi = 0.0, hi_mi = 0.0;
    std::vector<std::int64_t> lo_cnt, hi_cnt;
    std::uint64_t points = 0;
};

/// Evaluate one grid point; cnt is row-major m x nf.
inline void eval_point(const ScanState& st, const std::vector<std::int64_t>& cnt,
                       ScanBest& best) {
    ++best.points;
    const double invK = 1.0 / static_cast<double>(st.K);
    double mi = st.pinned_xlogx;
    double obj = st.pinned_obj;
    for (std::size_t i = 0; i < st.m; ++i) {
        double r = st.wq * st.pin[i];
        for (std::size_t c = 0; c < st.nf; ++c) {
            const std::int64_t cc = cnt[i * st.nf + c];
            if (cc > 0) {
                const double b = static_cast<double>(cc) * invK;
                r += st.wfree[c] * b;
                mi += st.wfree[c] * b * (st.log_count[cc] - st.log_K);
            }
        }
        if (r > kZero) mi -= r * std::log(r);
        if (i == st.p) {
            for (std::size_t c = 0; c < st.nf; ++c) {
                obj += st.wfree[c] * static_cast<double>(cnt[i * st.nf + c]) * invK;
            }
        }
    }
    mi *= st.scale;
    if (mi > st.theta_eff) return;
    if (obj < best.lo_obj) {
        best.lo_obj = obj;
        best.lo_mi = mi;
        best.lo_cnt = cnt;
    }
    if (obj > best.hi_obj) {
        best.hi_obj = obj;
        best.hi_mi = mi;
        best.hi_cnt = cnt;
    }
}

void scan_range(const ScanState& st, std::int64_t top_lo, std::int64_t top_hi,
                ScanBest& best) {
    const std::size_t depth = st.nf * (st.m - 1);
    std::vector<std::int64_t> cnt(st.m * st.nf, 0);
    std::vector<std::int64_t> partial(st.nf, 0);

    // Depth-first over free coordinates (column-major in scan order); the
    // final row of each column absorbs the remaining count mass.
    auto recurse = [&](auto&& self, std::size_t level) -> void {
        const std::size_t c = level / (st.m - 1);
        const std::size_t r = level % (st.m - 1);
        std::int64_t from = 0;
        std::int64_t to = st.K - partial[c];
        if (level == 0) {
            from = top_lo;
            to = std::min(to, top_hi - 1);
        }
        for (std::int64_t v = from; v <= to; ++v) {
            cnt[r * st.nf + c] = v;
            partial[c] += v;
            if (r == st.m - 2) {
                cnt[(st.m - 1) * st.nf + c] = st.K - partial[c];
            }
            if (level + 1 == depth) {
                eval_point(st, cnt, best);
            } else {
                self(self, level + 1);
            }
            partial[c] -= v;
        }
    };
    if (depth == 0) {
        eval_point(st, cnt, best);
    } else {
        recurse(recurse, 0);
    }
}

Matrix counts_to_matrix(const ScanState& st, const std::vector<std::int64_t>& cnt,
                        std::size_t n, std::size_t q,
                        const std::vector<std::int64_t>& fixed_counts) {
    Matrix b(st.m, n);
    for (std::size_t i = 0; i < st.m; ++i) b.at(i, q) = st.pin[i];
    std::size_t scanned = 0;
    std::size_t fixed = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == q) continue;
        const bool is_scanned =
            scanned < st.free_col.size() && st.free_col[scanned] == j;
        for (std::size_t i = 0; i < st.m; ++i) {
            const std::int64_t c = is_scanned ? cnt[i * st.nf + scanned]
                                              : fixed_counts[fixed * st.m + i];
            b.at(i, j) = static_cast<double>(c) / static_cast<double>(st.K);
        }
        if (is_scanned) {
            ++scanned;
        } else {
            ++fixed;
        }
    }
    return b;
}

std::vector<std::int64_t> round_to_grid(const std::vector<double>& probs,
                                        std::int64_t K) {
    // Largest-remainder rounding so the counts sum to K exactly.
    std::vector<std::int64_t> cnt(probs.size());
    std::vector<std::pair<double, std::size_t>> rem(probs.size());
    std::int64_t total = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double scaled = probs[i] * static_cast<double>(K);
        cnt[i] = static_cast<std::int64_t>(std::floor(scaled));
        rem[i] = {scaled - std::floor(scaled), i};
        total += cnt[i];
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t k = 0; total < K && k < rem.size(); ++k, ++total) {
        ++cnt[rem[k].second];
    }
    return cnt;
}

}  // namespace

BoundsResult grid_oracle(const JointDistribution& j, const Query& q, double theta,
                         double resolution) {
    const std::size_t n = j.nx();
    const std::size_t m = j.ny();
    if (q.x_index >= n || q.y_index >= m) {
        throw Error(ErrorCode::OutOfRange, "query index out of range");
    }
    const std::size_t dof = (n - 1) * (m - 1);
    if (dof > 3) {
        throw Error(ErrorCode::TooManyDOF,
                    "grid oracle supports at most 3 degrees of freedom");
    }
    if (!(resolution > 0.0) || resolution > 1e-3 * (1.0 + 1e-9)) {
        throw Error(ErrorCode::OutOfRange, "resolution must lie in (0, 1e-3]");
    }
    if (theta < 0.0) {
        throw Error(ErrorCode::OutOfRange, "theta must be nonnegative");
    }

    ScanState st;
    st.K = std::llround(1.0 / resolution);
    st.m = m;
    st.p = q.y_index;
    st.scale = log_unit_scale();

    const Distribution w = marginal_x(j);
    const Distribution pin = conditional_y_given_x(j, q.x_index);
    st.pin.assign(pin.weights().begin(), pin.weights().end());
    st.wq = w[q.x_index];

    std::vector<std::size_t> zero_cols;
    for (std::size_t col = 0; col < n; ++col) {
        if (col == q.x_index) continue;
        if (w[col] > kZero) {
            st.free_col.push_back(col);
            st.wfree.push_back(w[col]);
        } else {
            zero_cols.push_back(col);
        }
    }
    st.nf = st.free_col.size();

    st.log_count.resize(static_cast<std::size_t>(st.K) + 1, 0.0);
    for (std::int64_t c = 1; c <= st.K; ++c) {
        st.log_count[static_cast<std::size_t>(c)] = std::log(static_cast<double>(c));
    }
    st.log_K = std::log(static_cast<double>(st.K));
    st.pinned_obj = st.wq * st.pin[st.p];
    st.pinned_xlogx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (st.pin[i] > kZero) st.pinned_xlogx += st.wq * st.pin[i] * std::log(st.pin[i]);
    }

    // Grid rounding makes the exact zero-information table unreachable, so
    // feasibility is tested against theta plus the information content of the
    // nearest-to-pin grid point.
    const std::vector<std::int64_t> pin_cnt = round_to_grid(st.pin, st.K);
    double slack_mi = 0.0;
    {
        std::vector<std::int64_t> cnt(st.m * st.nf);
        for (std::size_t i = 0; i < st.m; ++i) {
            for (std::size_t c = 0; c < st.nf; ++c) cnt[i * st.nf + c] = pin_cnt[i];
        }
        ScanBest probe;
        probe.lo_obj = std::numeric_limits<double>::infinity();
        st.theta_eff = std::numeric_limits<double>::infinity();
        eval_point(st, cnt, probe);
        slack_mi = probe.lo_mi;
    }
    st.theta_eff = theta + slack_mi + 1e-12;

    double est_points = 1.0;
    for (std::size_t c = 0; c < st.nf; ++c) {
        double comb = 1.0;
        for (std::size_t t = 1; t < m; ++t) {
            comb *= static_cast<double>(st.K + static_cast<std::int64_t>(t)) /
                    static_cast<double>(t);
        }
        est_points *= comb;
    }

    unsigned n_threads = 1;
    if (st.nf > 0 && est_points > 2e6) {
        n_threads = std::max(1u, std::thread::hardware_concurrency());
        n_threads = std::min<unsigned>(n_threads, 16);
    }

    std::vector<ScanBest> results(n_threads);
    if (st.nf == 0) {
        scan_range(st, 0, 1, results[0]);
    } else if (n_threads == 1) {
        scan_range(st, 0, st.K + 1, results[0]);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t span = st.K + 1;
        for (unsigned t = 0; t < n_threads; ++t) {
            const std::int64_t lo = span * t / n_threads;
            const std::int64_t hi = span * (t + 1) / n_threads;
            pool.emplace_back(
                [&st, lo, hi, &results, t]() { scan_range(st, lo, hi, results[t]); });
        }
        for (auto& th : pool) th.join();
    }

    ScanBest best;
    for (const ScanBest& r : results) {
        best.points += r.points;
        if (r.lo_obj < best.lo_obj) {
            best.lo_obj = r.lo_obj;
            best.lo_mi = r.lo_mi;
            best.lo_cnt = r.lo_cnt;
        }
        if (r.hi_obj > best.hi_obj) {
            best.hi_obj = r.hi_obj;
            best.hi_mi = r.hi_mi;
            best.hi_cnt = r.hi_cnt;
        }
    }
    if (!std::isfinite(best.lo_obj)) {
        throw Error(ErrorCode::Infeasible, "grid scan found no feasible point");
    }

    std::vector<std::int64_t> fixed_counts;
    for (std::size_t z = 0; z < zero_cols.size(); ++z) {
        fixed_counts.insert(fixed_counts.end(), pin_cnt.begin(), pin_cnt.end());
    }

    BoundsResult out;
    out.formulation = Formulation::Counterfactual;
    out.theta = theta;
    const TianPearlBounds tp = tian_pearl_bounds(j, q);
    out.tp_lb = tp.lb;
    out.tp_ub = tp.ub;
    out.thresholds = threshold_for_query(j, q);
    out.lb = best.lo_obj;
    out.ub = best.hi_obj;
    out.lb_certificate = counts_to_matrix(st, best.lo_cnt, n, q.x_index, fixed_counts);
    out.ub_certificate = counts_to_matrix(st, best.hi_cnt, n, q.x_index, fixed_counts);
    out.diagnostics.status = "oracle";
    out.diagnostics.iterations = static_cast<int>(
        std::min<std::uint64_t>(best.points, std::numeric_limits<int>::max()));
    out.diagnostics.mi_at_lb = best.lo_mi;
    out.diagnostics.mi_at_ub = best.hi_mi;
    out.diagnostics.max_violation =
        std::max(0.0, std::max(best.lo_mi, best.hi_mi) - theta);
    return out;
}

}  // namespace cbound
