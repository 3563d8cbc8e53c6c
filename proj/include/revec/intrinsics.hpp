#pragma once

#include "revec/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revec {

/// Typed signature of a seeded vector intrinsic. Names follow
/// `<family>.<elem>.<bits>`, e.g. `packus.i32.128`.
struct IntrinsicSignature {
  std::string name;
  std::string family; // "packus.i32"
  unsigned bits = 0;  // operand/result width
  std::vector<Type> operands;
  Type result;
};

/// All seeded intrinsics, sorted by name. phadd.i16 deliberately has no
/// 512-bit variant.
const std::vector<IntrinsicSignature>& intrinsic_catalog();
const IntrinsicSignature* find_intrinsic(std::string_view name);

} // namespace revec
