#pragma once

#include "revec/target.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace revec {

struct ImapEntry {
  std::string narrow;
  unsigned p = 0;
  std::string wide;
  std::uint64_t tests_passed = 0;
};

/// (narrow intrinsic, factor p) -> wide intrinsic, with the number of fuzz
/// cases each conversion passed.
class IntrinsicMap {
public:
  using Key = std::pair<std::string, unsigned>;

  void add(ImapEntry e);
  std::optional<std::string> lookup(std::string_view narrow, unsigned p) const;
  const std::map<Key, ImapEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Drops entries whose wide intrinsic is not legal on `target`.
  IntrinsicMap filtered(const TargetDesc& target) const;

  /// `# revec-imap v1` header, then `narrow  p  wide  tests_passed` lines
  /// sorted by (narrow, p).
  std::string serialize() const;
  /// Throws std::invalid_argument on malformed input.
  static IntrinsicMap parse(std::string_view text);

private:
  std::map<Key, ImapEntry> entries_;
};

inline std::optional<std::string> lookup(const IntrinsicMap& m, std::string_view narrow, unsigned p) {
  return m.lookup(narrow, p);
}

} // namespace revec
