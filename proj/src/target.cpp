#include "revec/target.hpp"

#include "revec/intrinsics.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace revec {

std::optional<long> CostTable::lookup(std::string_view cls, unsigned width) const {
  if (auto it = costs_.find(std::pair{std::string(cls), width}); it != costs_.end()) return it->second;
  if (auto it = costs_.find(std::pair{std::string(cls), kAnyWidth}); it != costs_.end()) return it->second;
  return std::nullopt;
}

long CostTable::cost(std::string_view cls, unsigned width) const {
  if (auto c = lookup(cls, width)) return *c;
  if (cls == "gather" || cls == "extract") return cost("shuffle", width);
  return 1;
}

CostTable CostTable::parse(std::string_view text) {
  CostTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string cls, width, cost;
    if (!(fields >> cls)) continue;
    std::string extra;
    if (!(fields >> width >> cost) || (fields >> extra))
      throw std::invalid_argument("cost table line " + std::to_string(lineno) + ": expected `class width cost`");
    unsigned w = kAnyWidth;
    if (width != "*") {
      auto [p, ec] = std::from_chars(width.data(), width.data() + width.size(), w);
      if (ec != std::errc{} || p != width.data() + width.size())
        throw std::invalid_argument("cost table line " + std::to_string(lineno) + ": bad width `" + width + "`");
    }
    long c = 0;
    auto [p, ec] = std::from_chars(cost.data(), cost.data() + cost.size(), c);
    if (ec != std::errc{} || p != cost.data() + cost.size() || c < 0)
      throw std::invalid_argument("cost table line " + std::to_string(lineno) + ": bad cost `" + cost + "`");
    table.set(cls, w, c);
  }
  return table;
}

TargetDesc TargetDesc::named(std::string_view name) {
  TargetDesc t;
  if (name == "gen128") t.max_vector_bits = 128;
  else if (name == "gen256") t.max_vector_bits = 256;
  else if (name == "gen512") t.max_vector_bits = 512;
  else throw std::invalid_argument("unknown target `" + std::string(name) + "` (expected gen128, gen256 or gen512)");
  t.name = std::string(name);
  for (const auto& sig : intrinsic_catalog())
    if (sig.bits <= t.max_vector_bits) t.legal_intrinsics.insert(sig.name);
  return t;
}

} // namespace revec
