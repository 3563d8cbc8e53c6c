#pragma once

#include "revec/revec.hpp"

#include <utility>
#include <vector>

namespace revec::detail {

/// Uses of member `j` of `node` that are not consumed by the graph, as
/// (user instruction, operand index) pairs.
std::vector<std::pair<ValueId, std::size_t>> out_of_graph_uses(const Function& fn, const RevecGraph& g, int node,
                                                               std::size_t j);

/// Merges the constant operands of a pattern C shuffle pack into one narrow
/// constant; nullopt when the referenced lanes disagree or are undefined.
std::optional<std::vector<ConstLane>> merge_pattern_c_constants(const Function& fn, const std::vector<ValueId>& members,
                                                                bool constants_on_left);

/// Side holding the constants for a pattern C pack (true: left operand).
bool pattern_c_constants_on_left(const Function& fn, const std::vector<ValueId>& members);

} // namespace revec::detail
