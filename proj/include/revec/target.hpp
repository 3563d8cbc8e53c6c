#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>

namespace revec {

/// Additive cost table keyed by (opcode class, width in bits). Missing
/// entries fall back to the class wildcard, then to the default unit cost.
/// The pseudo-classes `gather` and `extract` fall back to `shuffle`.
class CostTable {
public:
  static constexpr unsigned kAnyWidth = 0;

  void set(std::string cls, unsigned width, long cost) { costs_[{std::move(cls), width}] = cost; }
  long cost(std::string_view cls, unsigned width) const;

  /// Parses lines of `class width cost` (width may be `*`), `#` comments.
  /// Throws std::invalid_argument on malformed lines.
  static CostTable parse(std::string_view text);

private:
  std::optional<long> lookup(std::string_view cls, unsigned width) const;
  std::map<std::pair<std::string, unsigned>, long, std::less<>> costs_;
};

struct TargetDesc {
  std::string name;
  unsigned max_vector_bits = 128;
  std::set<std::string, std::less<>> legal_intrinsics;
  CostTable costs;

  bool is_legal(std::string_view intrinsic) const { return legal_intrinsics.count(intrinsic) != 0; }

  /// gen128 / gen256 / gen512. Throws std::invalid_argument otherwise.
  static TargetDesc named(std::string_view name);
};

} // namespace revec
