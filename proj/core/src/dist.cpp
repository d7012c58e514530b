#include "cbound/dist.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace cbound {

namespace {

constexpr double kNegativeSlack = 1e-12;
constexpr double kNormalizationSlack = 1e-6;
constexpr double kEntropyZero = 1e-15;  // cells below this are exact zeros in entropy sums

// 1/ln(2) for bits, 1 for nats.
std::atomic<double> g_log_scale{1.4426950408889634};
std::atomic<int> g_log_base{static_cast<int>(LogBase::Bits)};

void check_entries(const std::vector<double>& w, double& total) {
    total = 0.0;
    for (double v : w) {
        if (v < -kNegativeSlack) {
            std::ostringstream os;
            os << "negative probability mass " << v;
            throw Error(ErrorCode::NegativeMass, os.str());
        }
        total += v;
    }
}

void check_total(double total) {
    if (std::abs(total - 1.0) > kNormalizationSlack) {
        std::ostringstream os;
        os << "weights sum to " << total << ", expected 1 within 1e-6";
        throw Error(ErrorCode::NotNormalized, os.str());
    }
}

double clamp_cell(double v) { return v < 0.0 ? 0.0 : v; }

}  // namespace

void set_log_base(LogBase base) {
    g_log_base.store(static_cast<int>(base));
    g_log_scale.store(base == LogBase::Bits ? 1.4426950408889634 : 1.0);
}

LogBase log_base() { return static_cast<LogBase>(g_log_base.load()); }

double log_unit_scale() { return g_log_scale.load(); }

double max_entropy(std::size_t k) {
    return k == 0 ? 0.0 : std::log(static_cast<double>(k)) * log_unit_scale();
}

Distribution::Distribution(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) {
        throw Error(ErrorCode::DegenerateShape, "empty probability vector");
    }
    double total = 0.0;
    check_entries(w_, total);
    check_total(total);
    for (double& v : w_) v = clamp_cell(v) / total;
}

JointDistribution JointDistribution::validate(std::vector<std::vector<double>> p,
                                              std::vector<std::string> x_labels,
                                              std::vector<std::string> y_labels) {
    if (p.empty() || p.front().empty()) {
        throw Error(ErrorCode::DegenerateShape, "empty probability table");
    }
    const std::size_t ny = p.size();
    const std::size_t nx = p.front().size();
    for (const auto& row : p) {
        if (row.size() != nx) {
            throw Error(ErrorCode::ShapeMismatch, "ragged probability table");
        }
    }
    if (nx < 2 || ny < 2) {
        throw Error(ErrorCode::DegenerateShape,
                    "joint distribution needs at least 2 states per axis");
    }

    JointDistribution j;
    j.nx_ = nx;
    j.ny_ = ny;
    j.p_.reserve(nx * ny);
    double total = 0.0;
    for (const auto& row : p) {
        for (double v : row) {
            if (v < -kNegativeSlack) {
                throw Error(ErrorCode::NegativeMass, "negative probability mass");
            }
            total += v;
        }
    }
    check_total(total);
    for (const auto& row : p) {
        for (double v : row) j.p_.push_back(clamp_cell(v) / total);
    }

    if (x_labels.empty()) {
        for (std::size_t i = 0; i < nx; ++i) x_labels.push_back("x" + std::to_string(i));
    }
    if (y_labels.empty()) {
        for (std::size_t i = 0; i < ny; ++i) y_labels.push_back("y" + std::to_string(i));
    }
    if (x_labels.size() != nx || y_labels.size() != ny) {
        throw Error(ErrorCode::ShapeMismatch, "label count does not match table shape");
    }
    j.x_labels_ = std::move(x_labels);
    j.y_labels_ = std::move(y_labels);
    return j;
}

std::size_t JointDistribution::x_index(const std::string& label) const {
    for (std::size_t i = 0; i < x_labels_.size(); ++i) {
        if (x_labels_[i] == label) return i;
    }
    throw Error(ErrorCode::UnknownVariable, "unknown X state '" + label + "'");
}

std::size_t JointDistribution::y_index(const std::string& label) const {
    for (std::size_t i = 0; i < y_labels_.size(); ++i) {
        if (y_labels_[i] == label) return i;
    }
    throw Error(ErrorCode::UnknownVariable, "unknown Y state '" + label + "'");
}

std::vector<std::vector<double>> JointDistribution::rows() const {
    std::vector<std::vector<double>> out(ny_, std::vector<double>(nx_));
    for (std::size_t y = 0; y < ny_; ++y)
        for (std::size_t x = 0; x < nx_; ++x) out[y][x] = p(y, x);
    return out;
}

FullDistribution FullDistribution::validate(std::vector<std::vector<std::vector<double>>> p,
                                            std::vector<std::string> x_labels,
                                            std::vector<std::string> y_labels,
                                            std::vector<std::string> z_labels) {
    if (p.empty() || p.front().empty() || p.front().front().empty()) {
        throw Error(ErrorCode::DegenerateShape, "empty probability tensor");
    }
    const std::size_t nz = p.size();
    const std::size_t ny = p.front().size();
    const std::size_t nx = p.front().front().size();
    double total = 0.0;
    for (const auto& slab : p) {
        if (slab.size() != ny) throw Error(ErrorCode::ShapeMismatch, "ragged tensor");
        for (const auto& row : slab) {
            if (row.size() != nx) throw Error(ErrorCode::ShapeMismatch, "ragged tensor");
            for (double v : row) {
                if (v < -kNegativeSlack) {
                    throw Error(ErrorCode::NegativeMass, "negative probability mass");
                }
                total += v;
            }
        }
    }
    if (nx < 2 || ny < 2) {
        throw Error(ErrorCode::DegenerateShape,
                    "full distribution needs at least 2 states on X and Y");
    }
    check_total(total);

    FullDistribution f;
    f.nx_ = nx;
    f.ny_ = ny;
    f.nz_ = nz;
    f.p_.reserve(nx * ny * nz);
    for (const auto& slab : p)
        for (const auto& row : slab)
            for (double v : row) f.p_.push_back(clamp_cell(v) / total);

    if (x_labels.empty()) {
        for (std::size_t i = 0; i < nx; ++i) x_labels.push_back("x" + std::to_string(i));
    }
    if (y_labels.empty()) {
        for (std::size_t i = 0; i < ny; ++i) y_labels.push_back("y" + std::to_string(i));
    }
    if (z_labels.empty()) {
        for (std::size_t i = 0; i < nz; ++i) z_labels.push_back("z" + std::to_string(i));
    }
    if (x_labels.size() != nx || y_labels.size() != ny || z_labels.size() != nz) {
        throw Error(ErrorCode::ShapeMismatch, "label count does not match tensor shape");
    }
    f.x_labels_ = std::move(x_labels);
    f.y_labels_ = std::move(y_labels);
    f.z_labels_ = std::move(z_labels);
    return f;
}

double entropy(const Distribution& d) {
    double h = 0.0;
    for (double v : d.weights()) {
        if (v > kEntropyZero) h -= v * std::log(v);
    }
    return h * log_unit_scale();
}

double binary_entropy(double p) {
    if (p < -kNegativeSlack || p > 1.0 + kNegativeSlack) {
        std::ostringstream os;
        os << "binary_entropy argument " << p << " outside [0,1]";
        throw Error(ErrorCode::OutOfRange, os.str());
    }
    double h = 0.0;
    if (p > kEntropyZero) h -= p * std::log(p);
    const double q = 1.0 - p;
    if (q > kEntropyZero) h -= q * std::log(q);
    return h * log_unit_scale();
}

double mutual_information(const JointDistribution& j) {
    const Distribution px = marginal_x(j);
    const Distribution py = marginal_y(j);
    double s = 0.0;
    for (std::size_t y = 0; y < j.ny(); ++y) {
        for (std::size_t x = 0; x < j.nx(); ++x) {
            const double v = j.p(y, x);
            if (v > kEntropyZero) s += v * std::log(v / (px[x] * py[y]));
        }
    }
    s *= log_unit_scale();
    return s < 0.0 ? 0.0 : s;
}

Distribution marginal_x(const JointDistribution& j) {
    std::vector<double> w(j.nx(), 0.0);
    for (std::size_t y = 0; y < j.ny(); ++y)
        for (std::size_t x = 0; x < j.nx(); ++x) w[x] += j.p(y, x);
    return Distribution(std::move(w));
}

Distribution marginal_y(const JointDistribution& j) {
    std::vector<double> w(j.ny(), 0.0);
    for (std::size_t y = 0; y < j.ny(); ++y)
        for (std::size_t x = 0; x < j.nx(); ++x) w[y] += j.p(y, x);
    return Distribution(std::move(w));
}

Distribution conditional_y_given_x(const JointDistribution& j, std::size_t x_index) {
    if (x_index >= j.nx()) {
        throw Error(ErrorCode::OutOfRange, "x index out of range");
    }
    double px = 0.0;
    for (std::size_t y = 0; y < j.ny(); ++y) px += j.p(y, x_index);
    if (px <= kNegativeSlack) {
        throw Error(ErrorCode::ZeroConditioningEvent,
                    "conditioning on zero-probability X state");
    }
    std::vector<double> w(j.ny());
    for (std::size_t y = 0; y < j.ny(); ++y) w[y] = j.p(y, x_index) / px;
    return Distribution(std::move(w));
}

JointDistribution marginalize_z(const FullDistribution& f) {
    std::vector<std::vector<double>> p(f.ny(), std::vector<double>(f.nx(), 0.0));
    for (std::size_t z = 0; z < f.nz(); ++z)
        for (std::size_t y = 0; y < f.ny(); ++y)
            for (std::size_t x = 0; x < f.nx(); ++x) p[y][x] += f.p(z, y, x);
    return JointDistribution::validate(std::move(p), f.x_labels(), f.y_labels());
}

Distribution z_marginal(const FullDistribution& f) {
    std::vector<double> w(f.nz(), 0.0);
    for (std::size_t z = 0; z < f.nz(); ++z)
        for (std::size_t y = 0; y < f.ny(); ++y)
            for (std::size_t x = 0; x < f.nx(); ++x) w[z] += f.p(z, y, x);
    return Distribution(std::move(w));
}

double z_entropy(const FullDistribution& f) { return entropy(z_marginal(f)); }

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::DegenerateShape: return "DegenerateShape";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ZeroConditioningEvent: return "ZeroConditioningEvent";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooManyDOF: return "TooManyDOF";
    case ErrorCode::ProgramTooLarge: return "ProgramTooLarge";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::SolverStalled: return "SolverStalled";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::CptShapeMismatch: return "CptShapeMismatch";
    case ErrorCode::RowNotNormalized: return "RowNotNormalized";
    case ErrorCode::ZeroEvidenceProbability: return "ZeroEvidenceProbability";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    }
    return "Unknown";
}

}  // namespace cbound
