#pragma once

#include "revec/imap.hpp"
#include "revec/interp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace revec {

enum class CaseOrigin { Random, Corner };

/// One input per operand, as raw little-endian bytes of the operand type.
struct TestCase {
  std::vector<std::vector<std::uint8_t>> operands;
  CaseOrigin origin = CaseOrigin::Random;
};

inline constexpr std::uint64_t kDefaultSeed = 20180924;
inline constexpr std::size_t kDefaultRandomCases = 2000;

/// Corner cases (every combination of the byte patterns 0x00, 0x55, 0xAA,
/// 0xFF across operands) followed by `n_random` seeded random cases.
std::vector<TestCase> gen_testcases(const Type& type, std::size_t n_random, std::uint64_t seed, unsigned arity = 2);

RtValue value_from_bytes(const Type& type, const std::vector<std::uint8_t>& bytes);

/// Does running `narrow` p times on vertical slices equal one `wide` call,
/// for every case? Cases are shaped for the wide operand type.
std::size_t count_passing(const std::string& narrow, const std::string& wide, unsigned p,
                          const std::vector<TestCase>& cases);

struct DiscoveryOptions {
  std::size_t n_random = kDefaultRandomCases;
  std::uint64_t seed = kDefaultSeed;
  std::vector<unsigned> factors{2, 4, 8};
};

/// Fuzzes every same-family (narrow, wide) pair of the intrinsic catalog.
IntrinsicMap discover_conversions(const DiscoveryOptions& opts = {});

struct ReplayReport {
  std::size_t entries = 0;
  std::vector<std::string> failures;
};

/// Re-checks every entry on fresh cases.
ReplayReport replay_conversions(const IntrinsicMap& m, std::size_t n_random, std::uint64_t seed);

} // namespace revec
