#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cbound/analytic.hpp"
#include "cbound/dist.hpp"

namespace cbound {

/// Dense row-major matrix, sized for the small tables this library works with.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), v(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

enum class Formulation { Counterfactual, Canonical };

const char* formulation_name(Formulation f);

struct SolverConfig {
    double theta = 0.0;              // entropy budget, in the active log base
    double tolerance = 1e-7;         // convergence tolerance on the optimum
    double feasibility_tol = 1e-6;   // allowed constraint violation
    int max_iterations = 100000;     // total inner-iteration budget per solve
    std::size_t size_limit = 100000; // max decision variables
};

/// Matrix of counterfactual conditionals b_ij = P(Y_{x_q} = y_i | x_j).
/// Column q is pinned to the observational conditional P(Y | x_q).
class CounterfactualTable {
public:
    CounterfactualTable(Matrix b, std::size_t query_col, const Distribution& pinned);

    const Matrix& b() const noexcept { return b_; }
    std::size_t query_col() const noexcept { return q_; }

private:
    Matrix b_;
    std::size_t q_;
};

/// Matrix of response-state conditionals a_ij = P(R_y = i | x_j) over the
/// m^n deterministic functions X -> Y. Response index i has base-m digits
/// (d_0, ..., d_{n-1}); digit d_j names the output f_i(x_j) = y_{d_j}.
class CanonicalTable {
public:
    CanonicalTable(Matrix a, std::size_t query_col, const Distribution& pinned);

    const Matrix& a() const noexcept { return a_; }
    std::size_t query_col() const noexcept { return q_; }

    /// Output digit of response state i at treatment column j.
    static std::size_t response_digit(std::size_t i, std::size_t j, std::size_t m);

private:
    Matrix a_;
    std::size_t q_;
};

struct SolverDiagnostics {
    std::string status;            // "optimal", "stalled", "oracle"
    int iterations = 0;            // total inner iterations across both extremes
    double max_violation = 0.0;    // worst constraint violation of the certificates
    double mi_at_lb = 0.0;
    double mi_at_ub = 0.0;
};

struct BoundsResult {
    double lb = 0.0;
    double ub = 1.0;
    double tp_lb = 0.0;
    double tp_ub = 1.0;
    double theta = 0.0;
    ThresholdPair thresholds;
    Formulation formulation = Formulation::Counterfactual;
    Matrix lb_certificate;   // optimal table at the lower extreme
    Matrix ub_certificate;   // optimal table at the upper extreme
    SolverDiagnostics diagnostics;
};

/// Entropy-constrained bounds via the counterfactual-probability program:
/// optimize sum_j b_pj P(x_j) subject to column simplices, the pinned
/// query column, and I(Y_x; X) <= theta.
BoundsResult bounds_counterfactual(const JointDistribution& j, const Query& q,
                                   const SolverConfig& cfg);

/// Same bounds via the canonical-partition program over m^n response states.
BoundsResult bounds_canonical(const JointDistribution& j, const Query& q,
                              const SolverConfig& cfg);

/// Independent verification oracle: exhaustively scans the free columns of
/// the counterfactual table on a simplex grid and returns the feasible
/// min/max of the objective. Requires (n-1)(m-1) <= 3 degrees of freedom.
BoundsResult grid_oracle(const JointDistribution& j, const Query& q, double theta,
                         double resolution);

/// Constraint left-hand side sum_ij t_ij P(x_j) log(t_ij / sum_k t_ik P(x_k)),
/// i.e. the mutual information of the induced joint (rows, X).
double table_mutual_information(const Matrix& table, const Distribution& px);

/// Decision-variable count: n*m^n (canonical) or n*m (counterfactual).
std::uint64_t count_parameters(std::size_t n, std::size_t m, Formulation f);

}  // namespace cbound
