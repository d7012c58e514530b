#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cbound/optimizer.hpp"
#include "cbound/rng.hpp"

namespace cbound {

/// Which roll index shifts the Dirichlet tilt of P(Y | x_j, z_k).
enum class ShiftMode { ByJ, ByK, ByJK };

struct SamplerConfig {
    std::size_t n = 2;   // |X|
    std::size_t m = 2;   // |Y|
    std::size_t k = 2;   // |Z|
    double alpha = 0.1;  // Dirichlet concentration for P(Z)
    std::uint64_t seed = 0;
    ShiftMode shift = ShiftMode::ByJK;
};

/// Normalized harmonic tilt (1, 1/2, ..., 1/k) the sampler rolls per state.
std::vector<double> sampler_tilt(std::size_t k);

/// Cyclic roll moving each entry forward by the given offset.
std::vector<double> roll_tilt(const std::vector<double>& v, std::size_t by);

/// Draw a full joint P(X, Y, Z):
///   P(Z) ~ Dir(alpha * 1_k);
///   P(X | z_k) ~ Dir(v rolled by k), v = normalized (1, 1/2, ..., 1/n);
///   P(Y | x_j, z_k) ~ Dir(u rolled by s(j,k)), u = normalized (1, ..., 1/m).
FullDistribution sample_full(const SamplerConfig& cfg);
FullDistribution sample_full(const SamplerConfig& cfg, Rng& rng);

/// Back-door adjusted ground truth sum_z P(z) P(y_p | x_q, z).
double ground_truth_effect(const FullDistribution& f, const Query& q);

/// Normalized count table of n_samples i.i.d. draws from the marginal P(X, Y).
JointDistribution empirical_joint(const FullDistribution& f, std::size_t n_samples,
                                  std::uint64_t seed);

struct ExperimentRecord {
    JointDistribution joint;
    double hz = 0.0;
    Query query;
    BoundsResult bounds;
    double truth = 0.0;
    double gap = 0.0;
};

/// One experiment sample: marginalize, solve with theta = H(Z) (or the
/// config's theta when fixed_theta is set), and attach the back-door truth.
ExperimentRecord evaluate_record(const FullDistribution& f, const Query& q,
                                 const SolverConfig& solver = {},
                                 bool fixed_theta = false);

enum class QueryMode { AllPairs, SinglePair };  // single: query (y_0, x_0)

struct ExperimentOptions {
    double bucket_width = 0.1;
    QueryMode query_mode = QueryMode::AllPairs;
    std::size_t threads = 0;  // 0 = hardware concurrency
    SolverConfig solver;      // theta is taken from H(Z) per record
    std::optional<double> theta_override;  // force a fixed budget instead
};

struct GapBucket {
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    double mean_gap = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
};

struct GapReport {
    SamplerConfig config;
    std::size_t n_distributions = 0;
    std::size_t skipped_queries = 0;
    std::vector<GapBucket> buckets;
};

struct TighterBucket {
    double lo = 0.0, hi = 0.0;
    std::size_t total = 0;
    std::size_t tighter = 0;
};

struct TighterReport {
    SamplerConfig config;
    std::size_t n_distributions = 0;
    std::size_t skipped_queries = 0;
    std::vector<TighterBucket> buckets;
};

struct FiniteSampleCell {
    double lo = 0.0, hi = 0.0;
    std::size_t n_samples = 0;
    double mean_err_entropy = 0.0;
    double mean_err_tp = 0.0;
    std::size_t count = 0;
};

struct FiniteSampleReport {
    SamplerConfig config;
    std::size_t n_distributions = 0;
    std::vector<std::size_t> sample_sizes;
    std::size_t skipped_queries = 0;
    std::vector<FiniteSampleCell> cells;  // bucket-major, then sample size
};

/// Mean bound gap per H(Z) bucket with normal-approximation 95% intervals,
/// over n_distributions sampler draws with theta = H(Z) per draw.
GapReport gap_experiment(const SamplerConfig& cfg, std::size_t n_distributions,
                         const ExperimentOptions& opt = {});

/// Count of records whose entropy-constrained bounds beat Tian-Pearl.
TighterReport tighter_count_experiment(const SamplerConfig& cfg,
                                       std::size_t n_distributions,
                                       const ExperimentOptions& opt = {});

/// Midpoint-estimation error from empirical joints of increasing size,
/// for the entropy-constrained and Tian-Pearl bounds.
FiniteSampleReport finite_sample_experiment(
    const SamplerConfig& cfg, std::size_t n_distributions,
    const std::vector<std::size_t>& sample_sizes = {10, 100, 1000, 10000},
    const ExperimentOptions& opt = {});

}  // namespace cbound
