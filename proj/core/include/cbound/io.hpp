#pragma once

#include <string>

#include "cbound/bayesnet.hpp"
#include "cbound/dist.hpp"
#include "cbound/optimizer.hpp"
#include "cbound/synth.hpp"

namespace cbound {

/// Joint distribution JSON:
///   {"x_states": [...], "y_states": [...], "pxy": [[...], ...]}
/// with pxy[y][x] row-major by y.
JointDistribution joint_from_json(const std::string& text);
std::string joint_to_json(const JointDistribution& j, int indent = 2);

/// Joint distribution CSV: header "y\x, x0, x1, ..." then one row per y.
JointDistribution joint_from_csv(const std::string& text);
std::string joint_to_csv(const JointDistribution& j);

/// Full distribution JSON adds "z_states" and "pzyx" indexed [z][y][x].
FullDistribution full_from_json(const std::string& text);
std::string full_to_json(const FullDistribution& f, int indent = 2);

/// BayesNet JSON: {"variables": [{"name", "states", "parents", "cpt"}, ...]}.
BayesNet bayesnet_from_json(const std::string& text);

/// Counts CSV: header of variable names with a final "count" column.
ContingencyTable counts_from_csv(const std::string& text);

/// BoundsResult JSON object (query carries state labels).
std::string bounds_to_json(const BoundsResult& r, const std::string& x_label,
                           const std::string& y_label, int indent = 2);

std::string gap_report_to_csv(const GapReport& r);
std::string gap_report_to_json(const GapReport& r, const std::string& metadata_json);
std::string tighter_report_to_csv(const TighterReport& r);
std::string tighter_report_to_json(const TighterReport& r,
                                   const std::string& metadata_json);
std::string finite_report_to_csv(const FiniteSampleReport& r);
std::string finite_report_to_json(const FiniteSampleReport& r,
                                  const std::string& metadata_json);

/// 64-bit FNV-1a content digest, hex encoded; used in run manifests.
std::string content_digest(const std::string& bytes);

const char* shift_mode_name(ShiftMode m);

}  // namespace cbound
