#include "cbound/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cbound {

namespace {

constexpr double kZero = 1e-15;
constexpr double kPinSlack = 1e-8;

/// Shared description of both convex programs. Rows of the decision table
/// are partitioned into outcome groups; column q carries pinned group masses
/// P(Y | x_q). The objective is the weighted mass of the target group.
struct Program {
    std::size_t n_rows = 0;          // m (counterfactual) or m^n (canonical)
    std::size_t n_cols = 0;
    std::size_t q = 0;               // pinned column
    std::size_t target = 0;          // group index p
    std::vector<std::size_t> group;  // group id per row
    std::vector<std::size_t> group_size;
    std::vector<double> pin;         // group masses at column q: P(y_r | x_q)
    std::vector<double> w;           // P(x)
    double wq = 0.0;                 // P(x_q)
    double wf = 0.0;                 // 1 - P(x_q), total free-column weight
};

struct InnerSolution {
    double mi = 0.0;
    std::vector<double> col_q;   // pinned column entries
    std::vector<double> col_t;   // common free-column entries
};

/// Minimize the mutual-information constraint over tables whose free columns
/// carry target-group mass tau. The minimizer is the I-projection fixed
/// point, available in closed form: the free column keeps the pinned
/// conditional's off-target shape rescaled to mass 1 - tau, and both columns
/// spread uniformly inside each response group (shared within-group shapes
/// reduce every KL term to its group-level value by the log-sum inequality).
InnerSolution inner_min_mi(const Program& pr, double tau) {
    const std::size_t N = pr.n_rows;
    InnerSolution sol;
    sol.col_q.assign(N, 0.0);
    sol.col_t.assign(N, 0.0);

    const double alpha = pr.pin[pr.target];
    const std::size_t target_rows = pr.group_size[pr.target];
    const std::size_t other_rows = N - target_rows;

    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t g = pr.group[i];
        sol.col_q[i] = pr.pin[g] / static_cast<double>(pr.group_size[g]);
        if (g == pr.target) {
            sol.col_t[i] = tau / static_cast<double>(target_rows);
        } else if (other_rows == 0) {
            sol.col_t[i] = 0.0;
        } else if (1.0 - alpha > kZero) {
            sol.col_t[i] = (1.0 - tau) * pr.pin[g] /
                           ((1.0 - alpha) * static_cast<double>(pr.group_size[g]));
        } else {
            // pinned column concentrated on the target group: the off-target
            // spread does not change the objective, pick uniform
            sol.col_t[i] = (1.0 - tau) / static_cast<double>(other_rows);
        }
    }

    double obj = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double r = pr.wq * sol.col_q[i] + pr.wf * sol.col_t[i];
        if (r <= kZero) continue;
        const double lr = std::log(r);
        if (sol.col_q[i] > kZero) {
            obj += pr.wq * sol.col_q[i] * (std::log(sol.col_q[i]) - lr);
        }
        if (sol.col_t[i] > kZero) {
            obj += pr.wf * sol.col_t[i] * (std::log(sol.col_t[i]) - lr);
        }
    }
    sol.mi = std::max(0.0, obj * log_unit_scale());
    return sol;
}

Matrix expand_certificate(const Program& pr, const InnerSolution& s) {
    Matrix b(pr.n_rows, pr.n_cols);
    for (std::size_t i = 0; i < pr.n_rows; ++i) {
        for (std::size_t j = 0; j < pr.n_cols; ++j) {
            b.at(i, j) = (j == pr.q) ? s.col_q[i] : s.col_t[i];
        }
    }
    return b;
}

double certificate_violation(const Program& pr, const Matrix& b, double theta,
                             double mi) {
    double worst = 0.0;
    for (std::size_t j = 0; j < pr.n_cols; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < pr.n_rows; ++i) {
            const double v = b.at(i, j);
            worst = std::max(worst, std::max(-v, v - 1.0));
            sum += v;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    std::vector<double> mass(pr.pin.size(), 0.0);
    for (std::size_t i = 0; i < pr.n_rows; ++i) mass[pr.group[i]] += b.at(i, pr.q);
    for (std::size_t g = 0; g < pr.pin.size(); ++g) {
        worst = std::max(worst, std::abs(mass[g] - pr.pin[g]));
    }
    worst = std::max(worst, mi - theta);
    return worst;
}

Program make_program(const JointDistribution& j, const Query& q, Formulation f) {
    Program pr;
    pr.n_cols = j.nx();
    pr.q = q.x_index;
    const Distribution w = marginal_x(j);
    pr.w.assign(w.weights().begin(), w.weights().end());
    pr.wq = pr.w[pr.q];
    pr.wf = std::max(0.0, 1.0 - pr.wq);

    const Distribution pin = conditional_y_given_x(j, q.x_index);
    pr.pin.assign(pin.weights().begin(), pin.weights().end());
    pr.target = q.y_index;

    const std::size_t m = j.ny();
    if (f == Formulation::Counterfactual) {
        pr.n_rows = m;
        pr.group.resize(m);
        for (std::size_t i = 0; i < m; ++i) pr.group[i] = i;
        pr.group_size.assign(m, 1);
    } else {
        std::uint64_t rows = 1;
        for (std::size_t t = 0; t < j.nx(); ++t) {
            if (rows > std::numeric_limits<std::uint64_t>::max() / m) {
                throw Error(ErrorCode::ProgramTooLarge, "canonical table overflows");
            }
            rows *= m;
        }
        pr.n_rows = static_cast<std::size_t>(rows);
        pr.group.resize(pr.n_rows);
        pr.group_size.assign(m, 0);
        for (std::size_t i = 0; i < pr.n_rows; ++i) {
            const std::size_t g = CanonicalTable::response_digit(i, pr.q, m);
            pr.group[i] = g;
            ++pr.group_size[g];
        }
    }
    return pr;
}

struct SideResult {
    double tau = 0.0;
    InnerSolution sol;
    bool stalled = false;
};

/// Bisect tau between the no-constraint point alpha (mutual information 0)
/// and the Tian-Pearl endpoint, keeping the largest feasible excursion.
SideResult solve_side(const Program& pr, double alpha, double endpoint, double theta,
                      const SolverConfig& cfg, int& iterations_used) {
    SideResult res;
    auto inner = [&](double tau) {
        ++iterations_used;
        return inner_min_mi(pr, tau);
    };

    InnerSolution end = inner(endpoint);
    if (end.mi <= theta + 1e-12) {
        res.tau = endpoint;
        res.sol = std::move(end);
        return res;
    }

    double lo = alpha;
    double hi = endpoint;
    InnerSolution best = inner(lo);
    const double c_tol = std::max(cfg.tolerance * 1e-2, 1e-14);
    for (int k = 0; k < 200 && std::abs(hi - lo) * pr.wf > c_tol; ++k) {
        if (iterations_used >= cfg.max_iterations) {
            res.stalled = true;
            break;
        }
        const double mid = 0.5 * (lo + hi);
        InnerSolution s = inner(mid);
        if (s.mi <= theta) {
            lo = mid;
            best = std::move(s);
        } else {
            hi = mid;
        }
    }
    res.tau = lo;
    res.sol = std::move(best);
    return res;
}

BoundsResult solve(const JointDistribution& j, const Query& q, const SolverConfig& cfg,
                   Formulation f) {
    if (q.x_index >= j.nx() || q.y_index >= j.ny()) {
        throw Error(ErrorCode::OutOfRange, "query index out of range");
    }
    if (cfg.theta < 0.0) {
        throw Error(ErrorCode::OutOfRange, "theta must be nonnegative");
    }
    const std::uint64_t params = count_parameters(j.nx(), j.ny(), f);
    if (params > cfg.size_limit) {
        std::ostringstream os;
        os << formulation_name(f) << " program has " << params
           << " decision variables, limit " << cfg.size_limit;
        throw Error(ErrorCode::ProgramTooLarge, os.str());
    }

    Program pr = make_program(j, q, f);
    const double alpha = pr.pin[pr.target];

    BoundsResult out;
    out.formulation = f;
    out.theta = cfg.theta;
    const TianPearlBounds tp = tian_pearl_bounds(j, q);
    out.tp_lb = tp.lb;
    out.tp_ub = tp.ub;
    out.thresholds = threshold_for_query(j, q);

    auto objective = [&](double tau) { return pr.wq * alpha + pr.wf * tau; };

    // theta = 0 (or a degenerate X marginal) leaves only replicated columns.
    if (cfg.theta == 0.0 || pr.wf <= 1e-12) {
        InnerSolution s = inner_min_mi(pr, alpha);
        out.lb = out.ub = alpha;
        Matrix cert = expand_certificate(pr, s);
        out.lb_certificate = cert;
        out.ub_certificate = std::move(cert);
        out.diagnostics.status = "optimal";
        out.diagnostics.iterations = 1;
        out.diagnostics.mi_at_lb = out.diagnostics.mi_at_ub = s.mi;
        out.diagnostics.max_violation =
            certificate_violation(pr, out.lb_certificate, cfg.theta, s.mi);
        return out;
    }

    int iterations = 0;
    SideResult lower = solve_side(pr, alpha, 0.0, cfg.theta, cfg, iterations);
    SideResult upper = solve_side(pr, alpha, 1.0, cfg.theta, cfg, iterations);

    out.lb = objective(lower.tau);
    out.ub = objective(upper.tau);
    out.lb_certificate = expand_certificate(pr, lower.sol);
    out.ub_certificate = expand_certificate(pr, upper.sol);
    out.diagnostics.iterations = iterations;
    out.diagnostics.mi_at_lb = lower.sol.mi;
    out.diagnostics.mi_at_ub = upper.sol.mi;
    out.diagnostics.status = (lower.stalled || upper.stalled) ? "stalled" : "optimal";
    out.diagnostics.max_violation = std::max(
        certificate_violation(pr, out.lb_certificate, cfg.theta, lower.sol.mi),
        certificate_violation(pr, out.ub_certificate, cfg.theta, upper.sol.mi));
    return out;
}

}  // namespace

const char* formulation_name(Formulation f) {
    return f == Formulation::Counterfactual ? "counterfactual" : "canonical";
}

CounterfactualTable::CounterfactualTable(Matrix b, std::size_t query_col,
                                         const Distribution& pinned)
    : b_(std::move(b)), q_(query_col) {
    if (q_ >= b_.cols || b_.rows != pinned.size()) {
        throw Error(ErrorCode::ShapeMismatch, "counterfactual table shape mismatch");
    }
    for (std::size_t jcol = 0; jcol < b_.cols; ++jcol) {
        double sum = 0.0;
        for (std::size_t i = 0; i < b_.rows; ++i) {
            const double v = b_.at(i, jcol);
            if (v < -kPinSlack || v > 1.0 + kPinSlack) {
                throw Error(ErrorCode::OutOfRange, "table entry outside [0,1]");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kPinSlack) {
            throw Error(ErrorCode::NotNormalized, "table column does not sum to 1");
        }
    }
    for (std::size_t i = 0; i < b_.rows; ++i) {
        if (std::abs(b_.at(i, q_) - pinned[i]) > kPinSlack) {
            throw Error(ErrorCode::ShapeMismatch,
                        "query column deviates from P(Y | x_q)");
        }
    }
}

CanonicalTable::CanonicalTable(Matrix a, std::size_t query_col, const Distribution& pinned)
    : a_(std::move(a)), q_(query_col) {
    const std::size_t m = pinned.size();
    if (q_ >= a_.cols) {
        throw Error(ErrorCode::ShapeMismatch, "query column out of range");
    }
    std::uint64_t expect = 1;
    for (std::size_t t = 0; t < a_.cols; ++t) expect *= m;
    if (a_.rows != expect) {
        throw Error(ErrorCode::ShapeMismatch, "canonical table must have m^n rows");
    }
    std::vector<double> mass(m, 0.0);
    for (std::size_t jcol = 0; jcol < a_.cols; ++jcol) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a_.rows; ++i) {
            const double v = a_.at(i, jcol);
            if (v < -kPinSlack || v > 1.0 + kPinSlack) {
                throw Error(ErrorCode::OutOfRange, "table entry outside [0,1]");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kPinSlack) {
            throw Error(ErrorCode::NotNormalized, "table column does not sum to 1");
        }
    }
    for (std::size_t i = 0; i < a_.rows; ++i) {
        mass[response_digit(i, q_, m)] += a_.at(i, q_);
    }
    for (std::size_t r = 0; r < m; ++r) {
        if (std::abs(mass[r] - pinned[r]) > kPinSlack) {
            throw Error(ErrorCode::ShapeMismatch,
                        "response-group masses deviate from P(Y | x_q)");
        }
    }
}

std::size_t CanonicalTable::response_digit(std::size_t i, std::size_t j, std::size_t m) {
    std::size_t v = i;
    for (std::size_t t = 0; t < j; ++t) v /= m;
    return v % m;
}

double table_mutual_information(const Matrix& table, const Distribution& px) {
    if (table.cols != px.size()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "table column count does not match |P(x)|");
    }
    std::vector<double> r(table.rows, 0.0);
    for (std::size_t i = 0; i < table.rows; ++i) {
        for (std::size_t jcol = 0; jcol < table.cols; ++jcol) {
            r[i] += table.at(i, jcol) * px[jcol];
        }
    }
    double s = 0.0;
    for (std::size_t i = 0; i < table.rows; ++i) {
        if (r[i] <= kZero) continue;
        const double lr = std::log(r[i]);
        for (std::size_t jcol = 0; jcol < table.cols; ++jcol) {
            const double v = table.at(i, jcol);
            if (v > kZero && px[jcol] > kZero) {
                s += v * px[jcol] * (std::log(v) - lr);
            }
        }
    }
    s *= log_unit_scale();
    return s < 0.0 ? 0.0 : s;
}

std::uint64_t count_parameters(std::size_t n, std::size_t m, Formulation f) {
    if (n < 2 || m < 2) {
        throw Error(ErrorCode::OutOfRange, "need at least 2 states per axis");
    }
    if (f == Formulation::Counterfactual) {
        return static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(m);
    }
    std::uint64_t rows = 1;
    for (std::size_t t = 0; t < n; ++t) {
        if (rows > std::numeric_limits<std::uint64_t>::max() / m) {
            throw Error(ErrorCode::Overflow, "m^n exceeds 64-bit range");
        }
        rows *= m;
    }
    if (rows > std::numeric_limits<std::uint64_t>::max() / n) {
        throw Error(ErrorCode::Overflow, "n*m^n exceeds 64-bit range");
    }
    return rows * static_cast<std::uint64_t>(n);
}

BoundsResult bounds_counterfactual(const JointDistribution& j, const Query& q,
                                   const SolverConfig& cfg) {
    return solve(j, q, cfg, Formulation::Counterfactual);
}

BoundsResult bounds_canonical(const JointDistribution& j, const Query& q,
                              const SolverConfig& cfg) {
    return solve(j, q, cfg, Formulation::Canonical);
}

}  // namespace cbound
