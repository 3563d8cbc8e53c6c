#pragma once

#include "revec/pipeline.hpp"

#include <map>
#include <string>

namespace revec {

inline constexpr const char* kStatsSchema = "revec-stats/1";

/// JSON statistics document. `checks` maps function name to its
/// equivalence result when a check ran.
std::string stats_document(const std::string& input, const TargetDesc& target, const PipelineOutput& out,
                           const std::map<std::string, EquivalenceResult>& checks = {});

} // namespace revec
