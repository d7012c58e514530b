#pragma once

#include <cstdint>
#include <vector>

namespace cbound {

/// Deterministic random stream with hand-rolled transforms, so experiment
/// outputs are reproducible independent of standard-library distribution
/// implementations. Streams derived from (seed, stream) are independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}
    Rng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(mix(seed ^ 0x9e3779b97f4a7c15ull) + stream)) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Marsaglia's polar method.
    double normal();

    /// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shapes below one use the
    /// boost draw at shape+1 scaled by U^(1/shape).
    double gamma(double shape);

    /// Dirichlet with the given concentration vector.
    std::vector<double> dirichlet(const std::vector<double>& alpha);

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
        z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ull;
        return z ^ (z >> 33);
    }

    std::uint64_t state_;
};

}  // namespace cbound
