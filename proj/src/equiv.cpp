#include "revec/equiv.hpp"

#include "revec/intrinsics.hpp"

#include <cstring>
#include <random>

namespace revec {

namespace {
constexpr std::uint8_t kCornerBytes[] = {0x00, 0x55, 0xAA, 0xFF};
}

std::vector<TestCase> gen_testcases(const Type& type, std::size_t n_random, std::uint64_t seed, unsigned arity) {
  const std::size_t bytes = type.total_bytes();
  std::vector<TestCase> out;
  std::size_t combos = 1;
  for (unsigned k = 0; k < arity; ++k) combos *= 4;
  for (std::size_t c = 0; c < combos; ++c) {
    TestCase tc;
    tc.origin = CaseOrigin::Corner;
    std::size_t code = c;
    for (unsigned k = 0; k < arity; ++k) {
      tc.operands.emplace_back(bytes, kCornerBytes[code % 4]);
      code /= 4;
    }
    out.push_back(std::move(tc));
  }
  std::mt19937_64 rng(seed);
  for (std::size_t r = 0; r < n_random; ++r) {
    TestCase tc;
    for (unsigned k = 0; k < arity; ++k) {
      std::vector<std::uint8_t> buf(bytes);
      for (std::size_t i = 0; i < bytes; i += 8) {
        std::uint64_t word = rng();
        std::memcpy(buf.data() + i, &word, std::min<std::size_t>(8, bytes - i));
      }
      tc.operands.push_back(std::move(buf));
    }
    out.push_back(std::move(tc));
  }
  return out;
}

RtValue value_from_bytes(const Type& type, const std::vector<std::uint8_t>& bytes) {
  const unsigned eb = type.elem.bytes();
  std::vector<std::uint64_t> lanes(type.lanes());
  for (std::size_t i = 0; i < lanes.size() && (i + 1) * eb <= bytes.size(); ++i) std::memcpy(&lanes[i], bytes.data() + i * eb, eb);
  return RtValue::vector(type, std::move(lanes));
}

std::size_t count_passing(const std::string& narrow, const std::string& wide, unsigned p,
                          const std::vector<TestCase>& cases) {
  const IntrinsicSignature* ns = find_intrinsic(narrow);
  const IntrinsicSignature* ws = find_intrinsic(wide);
  if (!ns || !ws || ns->operands.size() != ws->operands.size()) return 0;
  std::size_t passed = 0;
  for (const auto& tc : cases) {
    if (tc.operands.size() != ws->operands.size()) continue;
    std::vector<RtValue> wide_args;
    for (std::size_t k = 0; k < tc.operands.size(); ++k) wide_args.push_back(value_from_bytes(ws->operands[k], tc.operands[k]));
    RtValue expect = eval_intrinsic(wide, wide_args);

    std::vector<std::uint64_t> got;
    for (unsigned i = 0; i < p; ++i) {
      std::vector<RtValue> args;
      for (std::size_t k = 0; k < tc.operands.size(); ++k) {
        const std::size_t nb = ns->operands[k].total_bytes();
        std::vector<std::uint8_t> slice(tc.operands[k].begin() + i * nb, tc.operands[k].begin() + (i + 1) * nb);
        args.push_back(value_from_bytes(ns->operands[k], slice));
      }
      RtValue part = eval_intrinsic(narrow, args);
      got.insert(got.end(), part.lanes.begin(), part.lanes.end());
    }
    if (got == expect.lanes) ++passed;
  }
  return passed;
}

IntrinsicMap discover_conversions(const DiscoveryOptions& opts) {
  IntrinsicMap m;
  const auto& catalog = intrinsic_catalog();
  for (const auto& n : catalog)
    for (unsigned p : opts.factors)
      for (const auto& w : catalog) {
        if (w.family != n.family || w.bits != n.bits * p || w.operands.size() != n.operands.size()) continue;
        bool types_match = w.result.elem == n.result.elem;
        for (std::size_t k = 0; k < w.operands.size(); ++k) types_match = types_match && w.operands[k].elem == n.operands[k].elem;
        if (!types_match) continue;
        auto cases = gen_testcases(w.operands[0], opts.n_random, opts.seed, static_cast<unsigned>(w.operands.size()));
        std::size_t passed = count_passing(n.name, w.name, p, cases);
        if (passed == cases.size()) m.add({n.name, p, w.name, passed});
      }
  return m;
}

ReplayReport replay_conversions(const IntrinsicMap& m, std::size_t n_random, std::uint64_t seed) {
  ReplayReport r;
  for (const auto& [key, e] : m.entries()) {
    ++r.entries;
    const IntrinsicSignature* ws = find_intrinsic(e.wide);
    if (!ws) {
      r.failures.push_back(e.narrow + " x" + std::to_string(e.p) + ": unknown wide intrinsic " + e.wide);
      continue;
    }
    auto cases = gen_testcases(ws->operands[0], n_random, seed, static_cast<unsigned>(ws->operands.size()));
    std::size_t passed = count_passing(e.narrow, e.wide, e.p, cases);
    if (passed != cases.size())
      r.failures.push_back(e.narrow + " x" + std::to_string(e.p) + " -> " + e.wide + ": " +
                           std::to_string(cases.size() - passed) + " of " + std::to_string(cases.size()) + " cases fail");
  }
  return r;
}

} // namespace revec
