#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cbound/error.hpp"

namespace cbound {

/// Logarithm base used for every entropy / mutual-information quantity.
/// Bits (base 2) is the default; thresholds and theta budgets must use the
/// same base as the solver constraints, so this is a process-wide setting.
enum class LogBase { Bits, Nats };

void set_log_base(LogBase base);
LogBase log_base();

/// Multiplier converting natural-log sums into the active base.
double log_unit_scale();

/// Maximum entropy of a k-state distribution in the active base.
double max_entropy(std::size_t k);

/// Probability vector. Nonnegative, sums to one (renormalized exactly when
/// the raw total is within 1e-6 of one, rejected otherwise).
class Distribution {
public:
    explicit Distribution(std::vector<double> weights);

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& weights() const noexcept { return w_; }

private:
    std::vector<double> w_;
};

/// Validated joint probability table P(X, Y), stored as p[y][x].
class JointDistribution {
public:
    static JointDistribution validate(std::vector<std::vector<double>> p,
                                      std::vector<std::string> x_labels = {},
                                      std::vector<std::string> y_labels = {});

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }

    /// P(Y = y_i, X = x_j)
    double p(std::size_t y, std::size_t x) const { return p_[y * nx_ + x]; }

    const std::vector<std::string>& x_labels() const noexcept { return x_labels_; }
    const std::vector<std::string>& y_labels() const noexcept { return y_labels_; }

    std::size_t x_index(const std::string& label) const;
    std::size_t y_index(const std::string& label) const;

    std::vector<std::vector<double>> rows() const;

private:
    JointDistribution() = default;

    std::size_t nx_ = 0, ny_ = 0;
    std::vector<double> p_;  // row-major by y
    std::vector<std::string> x_labels_, y_labels_;
};

/// Validated three-way table P(X, Y, Z), stored as p[z][y][x].
class FullDistribution {
public:
    static FullDistribution validate(std::vector<std::vector<std::vector<double>>> p,
                                     std::vector<std::string> x_labels = {},
                                     std::vector<std::string> y_labels = {},
                                     std::vector<std::string> z_labels = {});

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t nz() const noexcept { return nz_; }

    /// P(Z = z_k, Y = y_i, X = x_j)
    double p(std::size_t z, std::size_t y, std::size_t x) const {
        return p_[(z * ny_ + y) * nx_ + x];
    }

    const std::vector<std::string>& x_labels() const noexcept { return x_labels_; }
    const std::vector<std::string>& y_labels() const noexcept { return y_labels_; }
    const std::vector<std::string>& z_labels() const noexcept { return z_labels_; }

private:
    FullDistribution() = default;

    std::size_t nx_ = 0, ny_ = 0, nz_ = 0;
    std::vector<double> p_;
    std::vector<std::string> x_labels_, y_labels_, z_labels_;
};

/// Shannon entropy in the active log base. 0 log 0 := 0.
double entropy(const Distribution& d);

/// H_b(p) = -p log p - (1-p) log(1-p). Rejects p outside [0,1] beyond 1e-12.
double binary_entropy(double p);

/// I(X;Y) of a joint table; clamped to be nonnegative.
double mutual_information(const JointDistribution& j);

Distribution marginal_x(const JointDistribution& j);
Distribution marginal_y(const JointDistribution& j);

/// P(Y | X = x_j); requires P(x_j) > 0.
Distribution conditional_y_given_x(const JointDistribution& j, std::size_t x_index);

JointDistribution marginalize_z(const FullDistribution& f);

Distribution z_marginal(const FullDistribution& f);
double z_entropy(const FullDistribution& f);

}  // namespace cbound
