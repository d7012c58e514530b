#include "cbound/io.hpp"

#include <cstdint>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace cbound {

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::ParseError, "malformed JSON document");
    }
    return doc;
}

std::vector<std::string> string_list(const json& node, const char* what) {
    if (!node.is_array()) {
        throw Error(ErrorCode::ParseError, std::string(what) + " must be an array");
    }
    std::vector<std::string> out;
    for (const auto& v : node) {
        if (!v.is_string()) {
            throw Error(ErrorCode::ParseError,
                        std::string(what) + " must contain strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<std::vector<double>> number_table(const json& node, const char* what) {
    if (!node.is_array()) {
        throw Error(ErrorCode::ParseError, std::string(what) + " must be an array");
    }
    std::vector<std::vector<double>> out;
    for (const auto& row : node) {
        if (!row.is_array()) {
            throw Error(ErrorCode::ParseError,
                        std::string(what) + " rows must be arrays");
        }
        std::vector<double> r;
        for (const auto& v : row) {
            if (!v.is_number()) {
                throw Error(ErrorCode::ParseError,
                            std::string(what) + " entries must be numbers");
            }
            r.push_back(v.get<double>());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') continue;  // metadata/comment lines
        lines.push_back(line);
    }
    return lines;
}

double parse_number(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError,
                    std::string("cannot parse ") + what + " '" + s + "'");
    }
}

}  // namespace

JointDistribution joint_from_json(const std::string& text) {
    const json doc = parse_json(text);
    if (!doc.contains("pxy")) {
        throw Error(ErrorCode::ParseError, "missing 'pxy' field");
    }
    std::vector<std::string> xs, ys;
    if (doc.contains("x_states")) xs = string_list(doc["x_states"], "x_states");
    if (doc.contains("y_states")) ys = string_list(doc["y_states"], "y_states");
    return JointDistribution::validate(number_table(doc["pxy"], "pxy"), std::move(xs),
                                       std::move(ys));
}

std::string joint_to_json(const JointDistribution& j, int indent) {
    json doc;
    doc["x_states"] = j.x_labels();
    doc["y_states"] = j.y_labels();
    doc["pxy"] = j.rows();
    return doc.dump(indent);
}

JointDistribution joint_from_csv(const std::string& text) {
    const auto lines = csv_lines(text);
    if (lines.size() < 2) {
        throw Error(ErrorCode::ParseError, "joint CSV needs a header and rows");
    }
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 3) {
        throw Error(ErrorCode::ParseError, "joint CSV header needs y\\x plus states");
    }
    std::vector<std::string> xs(header.begin() + 1, header.end());
    std::vector<std::string> ys;
    std::vector<std::vector<double>> p;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split_csv_line(lines[r]);
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::ParseError, "joint CSV row arity mismatch");
        }
        ys.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            row.push_back(parse_number(cells[c], "probability"));
        }
        p.push_back(std::move(row));
    }
    return JointDistribution::validate(std::move(p), std::move(xs), std::move(ys));
}

std::string joint_to_csv(const JointDistribution& j) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "y\\x";
    for (const auto& x : j.x_labels()) os << "," << x;
    os << "\n";
    for (std::size_t y = 0; y < j.ny(); ++y) {
        os << j.y_labels()[y];
        for (std::size_t x = 0; x < j.nx(); ++x) os << "," << j.p(y, x);
        os << "\n";
    }
    return os.str();
}

FullDistribution full_from_json(const std::string& text) {
    const json doc = parse_json(text);
    if (!doc.contains("pzyx")) {
        throw Error(ErrorCode::ParseError, "missing 'pzyx' field");
    }
    const json& tensor = doc["pzyx"];
    if (!tensor.is_array()) {
        throw Error(ErrorCode::ParseError, "'pzyx' must be an array");
    }
    std::vector<std::vector<std::vector<double>>> p;
    for (const auto& slab : tensor) {
        p.push_back(number_table(slab, "pzyx"));
    }
    std::vector<std::string> xs, ys, zs;
    if (doc.contains("x_states")) xs = string_list(doc["x_states"], "x_states");
    if (doc.contains("y_states")) ys = string_list(doc["y_states"], "y_states");
    if (doc.contains("z_states")) zs = string_list(doc["z_states"], "z_states");
    return FullDistribution::validate(std::move(p), std::move(xs), std::move(ys),
                                      std::move(zs));
}

std::string full_to_json(const FullDistribution& f, int indent) {
    json doc;
    doc["x_states"] = f.x_labels();
    doc["y_states"] = f.y_labels();
    doc["z_states"] = f.z_labels();
    json tensor = json::array();
    for (std::size_t z = 0; z < f.nz(); ++z) {
        json slab = json::array();
        for (std::size_t y = 0; y < f.ny(); ++y) {
            json row = json::array();
            for (std::size_t x = 0; x < f.nx(); ++x) row.push_back(f.p(z, y, x));
            slab.push_back(std::move(row));
        }
        tensor.push_back(std::move(slab));
    }
    doc["pzyx"] = std::move(tensor);
    return doc.dump(indent);
}

BayesNet bayesnet_from_json(const std::string& text) {
    const json doc = parse_json(text);
    if (!doc.contains("variables") || !doc["variables"].is_array()) {
        throw Error(ErrorCode::ParseError, "missing 'variables' array");
    }
    std::vector<BnVariable> vars;
    for (const auto& node : doc["variables"]) {
        BnVariable v;
        if (!node.contains("name") || !node["name"].is_string()) {
            throw Error(ErrorCode::ParseError, "variable without a name");
        }
        v.name = node["name"].get<std::string>();
        v.states = string_list(node.value("states", json::array()), "states");
        v.parents = string_list(node.value("parents", json::array()), "parents");
        const auto rows = number_table(node.value("cpt", json::array()), "cpt");
        if (rows.empty()) {
            throw Error(ErrorCode::CptShapeMismatch,
                        "variable '" + v.name + "' has an empty CPT");
        }
        v.cpt = Matrix(rows.size(), rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != v.cpt.cols) {
                throw Error(ErrorCode::CptShapeMismatch,
                            "ragged CPT for '" + v.name + "'");
            }
            for (std::size_t c = 0; c < v.cpt.cols; ++c) v.cpt.at(r, c) = rows[r][c];
        }
        vars.push_back(std::move(v));
    }
    return BayesNet::validate(std::move(vars));
}

ContingencyTable counts_from_csv(const std::string& text) {
    const auto lines = csv_lines(text);
    if (lines.size() < 2) {
        throw Error(ErrorCode::ParseError, "counts CSV needs a header and rows");
    }
    auto header = split_csv_line(lines[0]);
    if (header.size() < 2 || header.back() != "count") {
        throw Error(ErrorCode::ParseError,
                    "counts CSV must end with a 'count' column");
    }
    header.pop_back();
    std::vector<std::vector<std::string>> rows;
    std::vector<double> counts;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto cells = split_csv_line(lines[r]);
        if (cells.size() != header.size() + 1) {
            throw Error(ErrorCode::ParseError, "counts CSV row arity mismatch");
        }
        counts.push_back(parse_number(cells.back(), "count"));
        cells.pop_back();
        rows.push_back(std::move(cells));
    }
    return ContingencyTable::from_rows(std::move(header), std::move(rows),
                                       std::move(counts));
}

std::string bounds_to_json(const BoundsResult& r, const std::string& x_label,
                           const std::string& y_label, int indent) {
    json doc;
    doc["query"] = {{"x", x_label}, {"y", y_label}};
    doc["theta"] = r.theta;
    doc["lb"] = r.lb;
    doc["ub"] = r.ub;
    doc["tp_lb"] = r.tp_lb;
    doc["tp_ub"] = r.tp_ub;
    doc["threshold_lower"] = r.thresholds.lower;
    doc["threshold_upper"] = r.thresholds.upper;
    doc["threshold_heuristic"] = r.thresholds.heuristic;
    doc["formulation"] = formulation_name(r.formulation);
    doc["diagnostics"] = {{"status", r.diagnostics.status},
                          {"iterations", r.diagnostics.iterations},
                          {"max_violation", r.diagnostics.max_violation},
                          {"mi_at_lb", r.diagnostics.mi_at_lb},
                          {"mi_at_ub", r.diagnostics.mi_at_ub}};
    return doc.dump(indent);
}

namespace {

json sampler_config_json(const SamplerConfig& cfg) {
    return json{{"nx", cfg.n},   {"ny", cfg.m},          {"nz", cfg.k},
                {"alpha", cfg.alpha}, {"seed", cfg.seed},
                {"shift", shift_mode_name(cfg.shift)}};
}

json metadata_or_object(const std::string& metadata_json) {
    if (metadata_json.empty()) return json::object();
    json doc = json::parse(metadata_json, nullptr, false);
    return doc.is_discarded() ? json::object() : doc;
}

}  // namespace

std::string gap_report_to_csv(const GapReport& r) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "bucket_lo,bucket_hi,count,mean_gap,ci_lo,ci_hi\n";
    for (const GapBucket& b : r.buckets) {
        os << b.lo << "," << b.hi << "," << b.count << "," << b.mean_gap << ","
           << b.ci_lo << "," << b.ci_hi << "\n";
    }
    return os.str();
}

std::string gap_report_to_json(const GapReport& r, const std::string& metadata_json) {
    json doc;
    doc["metadata"] = metadata_or_object(metadata_json);
    doc["config"] = sampler_config_json(r.config);
    doc["n_distributions"] = r.n_distributions;
    doc["skipped_queries"] = r.skipped_queries;
    json buckets = json::array();
    for (const GapBucket& b : r.buckets) {
        buckets.push_back({{"bucket_lo", b.lo},
                           {"bucket_hi", b.hi},
                           {"count", b.count},
                           {"mean_gap", b.mean_gap},
                           {"ci_lo", b.ci_lo},
                           {"ci_hi", b.ci_hi}});
    }
    doc["buckets"] = std::move(buckets);
    return doc.dump(2);
}

std::string tighter_report_to_csv(const TighterReport& r) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "bucket_lo,bucket_hi,total,tighter\n";
    for (const TighterBucket& b : r.buckets) {
        os << b.lo << "," << b.hi << "," << b.total << "," << b.tighter << "\n";
    }
    return os.str();
}

std::string tighter_report_to_json(const TighterReport& r,
                                   const std::string& metadata_json) {
    json doc;
    doc["metadata"] = metadata_or_object(metadata_json);
    doc["config"] = sampler_config_json(r.config);
    doc["n_distributions"] = r.n_distributions;
    doc["skipped_queries"] = r.skipped_queries;
    json buckets = json::array();
    for (const TighterBucket& b : r.buckets) {
        buckets.push_back({{"bucket_lo", b.lo},
                           {"bucket_hi", b.hi},
                           {"total", b.total},
                           {"tighter", b.tighter}});
    }
    doc["buckets"] = std::move(buckets);
    return doc.dump(2);
}

std::string finite_report_to_csv(const FiniteSampleReport& r) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "bucket_lo,bucket_hi,n_samples,mean_err_entropy,mean_err_tp,count\n";
    for (const FiniteSampleCell& c : r.cells) {
        os << c.lo << "," << c.hi << "," << c.n_samples << "," << c.mean_err_entropy
           << "," << c.mean_err_tp << "," << c.count << "\n";
    }
    return os.str();
}

std::string finite_report_to_json(const FiniteSampleReport& r,
                                  const std::string& metadata_json) {
    json doc;
    doc["metadata"] = metadata_or_object(metadata_json);
    doc["config"] = sampler_config_json(r.config);
    doc["n_distributions"] = r.n_distributions;
    doc["sample_sizes"] = r.sample_sizes;
    doc["skipped_queries"] = r.skipped_queries;
    json cells = json::array();
    for (const FiniteSampleCell& c : r.cells) {
        cells.push_back({{"bucket_lo", c.lo},
                         {"bucket_hi", c.hi},
                         {"n_samples", c.n_samples},
                         {"mean_err_entropy", c.mean_err_entropy},
                         {"mean_err_tp", c.mean_err_tp},
                         {"count", c.count}});
    }
    doc["cells"] = std::move(cells);
    return doc.dump(2);
}

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

const char* shift_mode_name(ShiftMode m) {
    switch (m) {
    case ShiftMode::ByJ: return "by_j";
    case ShiftMode::ByK: return "by_k";
    case ShiftMode::ByJK: default: return "by_jk";
    }
}

}  // namespace cbound
