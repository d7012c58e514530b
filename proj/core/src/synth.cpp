#include "cbound/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

namespace cbound {

namespace {

constexpr double kSkipPx = 1e-6;
constexpr double kTighterMargin = 1e-6;

std::size_t shift_index(const SamplerConfig& cfg, std::size_t j, std::size_t k) {
    switch (cfg.shift) {
    case ShiftMode::ByJ: return j % cfg.m;
    case ShiftMode::ByK: return k % cfg.m;
    case ShiftMode::ByJK: default: return (j + k * cfg.n) % cfg.m;
    }
}

std::size_t bucket_count(std::size_t k, double width) {
    // H(Z) = log k lands in the top bucket's closed upper edge
    const double hmax = max_entropy(k);
    const auto n = static_cast<std::size_t>(std::ceil((hmax - 1e-9) / width));
    return n == 0 ? 1 : n;
}

std::size_t bucket_of(double h, double width, std::size_t n_buckets) {
    const auto b = static_cast<std::size_t>(h / width);
    return b >= n_buckets ? n_buckets - 1 : b;
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Run fn(index, rng) for every index in [0, count) on a worker pool; each
/// task owns a stream derived from (seed, index), so the result is the same
/// for any scheduling.
void parallel_for_tasks(std::size_t count, std::uint64_t seed, std::size_t threads,
                        const std::function<void(std::size_t, Rng&)>& fn) {
    threads = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
    if (count == 0) return;
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            Rng rng(seed, i);
            fn(i, rng);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                Rng rng(seed, i);
                fn(i, rng);
            }
        });
    }
    for (auto& th : pool) th.join();
}

std::vector<Query> queries_for(const JointDistribution& j, QueryMode mode) {
    std::vector<Query> out;
    if (mode == QueryMode::SinglePair) {
        out.push_back({0, 0});
        return out;
    }
    for (std::size_t x = 0; x < j.nx(); ++x) {
        for (std::size_t y = 0; y < j.ny(); ++y) out.push_back({x, y});
    }
    return out;
}

}  // namespace

std::vector<double> sampler_tilt(std::size_t k) {
    std::vector<double> v(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        v[i] = 1.0 / static_cast<double>(i + 1);
        total += v[i];
    }
    for (double& x : v) x /= total;
    return v;
}

std::vector<double> roll_tilt(const std::vector<double>& v, std::size_t by) {
    const std::size_t k = v.size();
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[(i + by) % k] = v[i];
    return out;
}

FullDistribution sample_full(const SamplerConfig& cfg) {
    Rng rng(cfg.seed);
    return sample_full(cfg, rng);
}

FullDistribution sample_full(const SamplerConfig& cfg, Rng& rng) {
    if (cfg.n < 2 || cfg.m < 2 || cfg.k < 1) {
        throw Error(ErrorCode::DegenerateShape, "sampler needs n, m >= 2 and k >= 1");
    }
    if (!(cfg.alpha > 0.0)) {
        throw Error(ErrorCode::OutOfRange, "Dirichlet concentration must be positive");
    }
    const std::vector<double> pz =
        cfg.k == 1 ? std::vector<double>{1.0}
                   : rng.dirichlet(std::vector<double>(cfg.k, cfg.alpha));
    const std::vector<double> v = sampler_tilt(cfg.n);
    const std::vector<double> u = sampler_tilt(cfg.m);

    std::vector<std::vector<std::vector<double>>> p(
        cfg.k, std::vector<std::vector<double>>(cfg.m, std::vector<double>(cfg.n)));
    for (std::size_t k = 0; k < cfg.k; ++k) {
        const std::vector<double> px = rng.dirichlet(roll_tilt(v, k));
        for (std::size_t j = 0; j < cfg.n; ++j) {
            const std::vector<double> py =
                rng.dirichlet(roll_tilt(u, shift_index(cfg, j, k)));
            for (std::size_t i = 0; i < cfg.m; ++i) {
                p[k][i][j] = pz[k] * px[j] * py[i];
            }
        }
    }
    return FullDistribution::validate(std::move(p));
}

double ground_truth_effect(const FullDistribution& f, const Query& q) {
    if (q.x_index >= f.nx() || q.y_index >= f.ny()) {
        throw Error(ErrorCode::OutOfRange, "query index out of range");
    }
    double effect = 0.0;
    for (std::size_t z = 0; z < f.nz(); ++z) {
        double pz = 0.0;
        double pxz = 0.0;
        for (std::size_t y = 0; y < f.ny(); ++y) {
            for (std::size_t x = 0; x < f.nx(); ++x) pz += f.p(z, y, x);
            pxz += f.p(z, y, q.x_index);
        }
        if (pz <= 1e-15) continue;
        if (pxz <= 1e-15) {
            throw Error(ErrorCode::ZeroConditioningEvent,
                        "P(x_q | z) = 0 on a positive-mass confounder state");
        }
        effect += pz * (f.p(z, q.y_index, q.x_index) / pxz);
    }
    return effect;
}

JointDistribution empirical_joint(const FullDistribution& f, std::size_t n_samples,
                                  std::uint64_t seed) {
    if (n_samples < 1) {
        throw Error(ErrorCode::OutOfRange, "need at least one sample");
    }
    const JointDistribution truth = marginalize_z(f);
    std::vector<double> cum;
    cum.reserve(truth.nx() * truth.ny());
    double acc = 0.0;
    for (std::size_t y = 0; y < truth.ny(); ++y) {
        for (std::size_t x = 0; x < truth.nx(); ++x) {
            acc += truth.p(y, x);
            cum.push_back(acc);
        }
    }
    Rng rng(seed);
    std::vector<std::size_t> counts(cum.size(), 0);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double u = rng.uniform() * acc;
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        const std::size_t cell =
            it == cum.end() ? cum.size() - 1
                            : static_cast<std::size_t>(it - cum.begin());
        ++counts[cell];
    }
    std::vector<std::vector<double>> p(truth.ny(), std::vector<double>(truth.nx()));
    for (std::size_t y = 0; y < truth.ny(); ++y) {
        for (std::size_t x = 0; x < truth.nx(); ++x) {
            p[y][x] = static_cast<double>(counts[y * truth.nx() + x]) /
                      static_cast<double>(n_samples);
        }
    }
    return JointDistribution::validate(std::move(p), truth.x_labels(), truth.y_labels());
}

ExperimentRecord evaluate_record(const FullDistribution& f, const Query& q,
                                 const SolverConfig& solver, bool fixed_theta) {
    SolverConfig cfg = solver;
    const double hz = z_entropy(f);
    if (!fixed_theta) cfg.theta = hz;
    ExperimentRecord rec{marginalize_z(f), hz, q, {}, 0.0, 0.0};
    rec.bounds = bounds_counterfactual(rec.joint, q, cfg);
    rec.truth = ground_truth_effect(f, q);
    rec.gap = rec.bounds.ub - rec.bounds.lb;
    return rec;
}

GapReport gap_experiment(const SamplerConfig& cfg, std::size_t n_distributions,
                         const ExperimentOptions& opt) {
    GapReport report;
    report.config = cfg;
    report.n_distributions = n_distributions;
    const std::size_t nb = bucket_count(cfg.k, opt.bucket_width);
    report.buckets.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        report.buckets[b].lo = opt.bucket_width * static_cast<double>(b);
        report.buckets[b].hi = opt.bucket_width * static_cast<double>(b + 1);
    }
    if (n_distributions == 0) return report;

    struct Slot {
        std::size_t bucket = 0;
        std::vector<double> gaps;
        std::size_t skipped = 0;
    };
    std::vector<Slot> slots(n_distributions);
    parallel_for_tasks(n_distributions, cfg.seed, opt.threads,
                       [&](std::size_t idx, Rng& rng) {
        const FullDistribution f = sample_full(cfg, rng);
        const JointDistribution j = marginalize_z(f);
        const double hz = z_entropy(f);
        Slot& slot = slots[idx];
        slot.bucket = bucket_of(hz, opt.bucket_width, nb);
        const Distribution px = marginal_x(j);
        SolverConfig scfg = opt.solver;
        scfg.theta = opt.theta_override.value_or(hz);
        for (const Query& q : queries_for(j, opt.query_mode)) {
            if (px[q.x_index] < kSkipPx) {
                ++slot.skipped;
                continue;
            }
            const BoundsResult r = bounds_counterfactual(j, q, scfg);
            slot.gaps.push_back(r.ub - r.lb);
        }
    });

    std::vector<double> sum(nb, 0.0), sumsq(nb, 0.0);
    std::vector<std::size_t> count(nb, 0);
    for (const Slot& s : slots) {
        report.skipped_queries += s.skipped;
        for (double g : s.gaps) {
            sum[s.bucket] += g;
            sumsq[s.bucket] += g * g;
            ++count[s.bucket];
        }
    }
    for (std::size_t b = 0; b < nb; ++b) {
        GapBucket& gb = report.buckets[b];
        gb.count = count[b];
        if (count[b] == 0) continue;
        const double mean = sum[b] / static_cast<double>(count[b]);
        gb.mean_gap = mean;
        double se = 0.0;
        if (count[b] > 1) {
            const double var = std::max(
                0.0, (sumsq[b] - sum[b] * mean) / static_cast<double>(count[b] - 1));
            se = std::sqrt(var / static_cast<double>(count[b]));
        }
        gb.ci_lo = mean - 1.96 * se;
        gb.ci_hi = mean + 1.96 * se;
    }
    return report;
}

TighterReport tighter_count_experiment(const SamplerConfig& cfg,
                                       std::size_t n_distributions,
                                       const ExperimentOptions& opt) {
    TighterReport report;
    report.config = cfg;
    report.n_distributions = n_distributions;
    const std::size_t nb = bucket_count(cfg.k, opt.bucket_width);
    report.buckets.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        report.buckets[b].lo = opt.bucket_width * static_cast<double>(b);
        report.buckets[b].hi = opt.bucket_width * static_cast<double>(b + 1);
    }
    if (n_distributions == 0) return report;

    struct Slot {
        std::size_t bucket = 0;
        std::size_t total = 0, tighter = 0, skipped = 0;
    };
    std::vector<Slot> slots(n_distributions);
    parallel_for_tasks(n_distributions, cfg.seed, opt.threads,
                       [&](std::size_t idx, Rng& rng) {
        const FullDistribution f = sample_full(cfg, rng);
        const JointDistribution j = marginalize_z(f);
        const double hz = z_entropy(f);
        Slot& slot = slots[idx];
        slot.bucket = bucket_of(hz, opt.bucket_width, nb);
        const Distribution px = marginal_x(j);
        SolverConfig scfg = opt.solver;
        scfg.theta = opt.theta_override.value_or(hz);
        for (const Query& q : queries_for(j, opt.query_mode)) {
            if (px[q.x_index] < kSkipPx) {
                ++slot.skipped;
                continue;
            }
            const BoundsResult r = bounds_counterfactual(j, q, scfg);
            ++slot.total;
            if (r.lb > r.tp_lb + kTighterMargin || r.ub < r.tp_ub - kTighterMargin) {
                ++slot.tighter;
            }
        }
    });
    for (const Slot& s : slots) {
        report.skipped_queries += s.skipped;
        report.buckets[s.bucket].total += s.total;
        report.buckets[s.bucket].tighter += s.tighter;
    }
    return report;
}

FiniteSampleReport finite_sample_experiment(const SamplerConfig& cfg,
                                            std::size_t n_distributions,
                                            const std::vector<std::size_t>& sample_sizes,
                                            const ExperimentOptions& opt) {
    for (std::size_t n : sample_sizes) {
        if (n < 1) throw Error(ErrorCode::OutOfRange, "sample sizes must be >= 1");
    }
    FiniteSampleReport report;
    report.config = cfg;
    report.n_distributions = n_distributions;
    report.sample_sizes = sample_sizes;
    const std::size_t nb = bucket_count(cfg.k, opt.bucket_width);
    const std::size_t ns = sample_sizes.size();
    report.cells.resize(nb * ns);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t s = 0; s < ns; ++s) {
            FiniteSampleCell& c = report.cells[b * ns + s];
            c.lo = opt.bucket_width * static_cast<double>(b);
            c.hi = opt.bucket_width * static_cast<double>(b + 1);
            c.n_samples = sample_sizes[s];
        }
    }
    if (n_distributions == 0) return report;

    struct Slot {
        std::size_t bucket = 0;
        std::vector<double> err_entropy, err_tp;  // per sample size, summed
        std::vector<std::size_t> count;
        std::size_t skipped = 0;
    };
    std::vector<Slot> slots(n_distributions);
    parallel_for_tasks(n_distributions, cfg.seed, opt.threads,
                       [&](std::size_t idx, Rng& rng) {
        Slot& slot = slots[idx];
        slot.err_entropy.assign(ns, 0.0);
        slot.err_tp.assign(ns, 0.0);
        slot.count.assign(ns, 0);
        const FullDistribution f = sample_full(cfg, rng);
        const double hz = z_entropy(f);
        slot.bucket = bucket_of(hz, opt.bucket_width, nb);
        SolverConfig scfg = opt.solver;
        scfg.theta = opt.theta_override.value_or(hz);
        for (std::size_t s = 0; s < ns; ++s) {
            const JointDistribution emp =
                empirical_joint(f, sample_sizes[s], rng.next_u64());
            const Distribution px = marginal_x(emp);
            for (const Query& q : queries_for(emp, opt.query_mode)) {
                if (px[q.x_index] < kSkipPx) {
                    ++slot.skipped;
                    continue;
                }
                double truth;
                try {
                    truth = ground_truth_effect(f, q);
                } catch (const Error&) {
                    ++slot.skipped;
                    continue;
                }
                const BoundsResult r = bounds_counterfactual(emp, q, scfg);
                const TianPearlBounds tp = tian_pearl_bounds(emp, q);
                slot.err_entropy[s] += std::abs(0.5 * (r.lb + r.ub) - truth);
                slot.err_tp[s] += std::abs(0.5 * (tp.lb + tp.ub) - truth);
                ++slot.count[s];
            }
        }
    });

    for (const Slot& slot : slots) {
        report.skipped_queries += slot.skipped;
        for (std::size_t s = 0; s < ns; ++s) {
            FiniteSampleCell& c = report.cells[slot.bucket * ns + s];
            c.mean_err_entropy += slot.err_entropy[s];
            c.mean_err_tp += slot.err_tp[s];
            c.count += slot.count[s];
        }
    }
    for (FiniteSampleCell& c : report.cells) {
        if (c.count > 0) {
            c.mean_err_entropy /= static_cast<double>(c.count);
            c.mean_err_tp /= static_cast<double>(c.count);
        }
    }
    return report;
}

}  // namespace cbound
