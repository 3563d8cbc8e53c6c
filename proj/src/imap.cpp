#include "revec/imap.hpp"

#include "revec/intrinsics.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace revec {

namespace {
constexpr std::string_view kHeader = "# revec-imap v1";
}

void IntrinsicMap::add(ImapEntry e) {
  Key key{e.narrow, e.p};
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    // Same key twice: keep the widest candidate.
    const auto* a = find_intrinsic(it->second.wide);
    const auto* b = find_intrinsic(e.wide);
    if (a && b && b->bits <= a->bits) return;
  }
  entries_[key] = std::move(e);
}

std::optional<std::string> IntrinsicMap::lookup(std::string_view narrow, unsigned p) const {
  auto it = entries_.find(Key{std::string(narrow), p});
  if (it == entries_.end()) return std::nullopt;
  return it->second.wide;
}

IntrinsicMap IntrinsicMap::filtered(const TargetDesc& target) const {
  IntrinsicMap out;
  for (const auto& [k, e] : entries_)
    if (target.is_legal(e.wide)) out.entries_.emplace(k, e);
  return out;
}

std::string IntrinsicMap::serialize() const {
  std::ostringstream os;
  os << kHeader << "\n";
  for (const auto& [k, e] : entries_) os << e.narrow << "  " << e.p << "  " << e.wide << "  " << e.tests_passed << "\n";
  return os.str();
}

IntrinsicMap IntrinsicMap::parse(std::string_view text) {
  IntrinsicMap m;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kHeader) throw std::invalid_argument("conversion database: missing `" + std::string(kHeader) + "` header");
      header = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    ImapEntry e;
    std::string extra;
    if (!(fields >> e.narrow >> e.p >> e.wide >> e.tests_passed) || (fields >> extra))
      throw std::invalid_argument("conversion database line " + std::to_string(lineno) +
                                  ": expected `narrow p wide tests_passed`");
    const auto* n = find_intrinsic(e.narrow);
    const auto* w = find_intrinsic(e.wide);
    if (!n || !w) throw std::invalid_argument("conversion database line " + std::to_string(lineno) + ": unknown intrinsic");
    if (e.p == 0 || n->bits * e.p != w->bits)
      throw std::invalid_argument("conversion database line " + std::to_string(lineno) + ": width mismatch");
    m.add(std::move(e));
  }
  if (!header) throw std::invalid_argument("conversion database is empty");
  return m;
}

} // namespace revec
