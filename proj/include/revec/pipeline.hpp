#pragma once

#include "revec/imap.hpp"
#include "revec/interp.hpp"
#include "revec/preprocess.hpp"
#include "revec/revec.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace revec {

struct FunctionReport {
  std::string name;
  std::vector<LoopReport> loops;
  std::vector<std::string> rejected_loops;
  std::vector<GraphReport> graphs;
};

struct PipelineOutput {
  ProgramModule transformed;
  std::vector<FunctionReport> reports;
};

/// Preprocessing followed by revectorization of every function.
PipelineOutput run_pipeline(const ProgramModule& m, const TargetDesc& target, const IntrinsicMap& imap);

enum class Verdict { Pass, Fail, Indeterminate };
std::string_view verdict_name(Verdict v);

struct EquivalenceResult {
  std::string function;
  Verdict verdict = Verdict::Pass;
  std::size_t inputs_checked = 0;
  std::string detail; // first mismatching input, or why the check was inconclusive
  DynamicSummary before;
  DynamicSummary after;
};

inline constexpr std::size_t kCheckBufferElements = 4096;

/// Random arguments for `fn`: one buffer of kCheckBufferElements elements
/// per pointer parameter, small non-negative integer scalars.
std::pair<std::map<std::string, RtValue>, MemoryImage> random_arguments(const Function& fn, std::uint64_t seed);

/// Runs both functions on `n` seeded random inputs and compares the final
/// memory and return value. Throws std::invalid_argument when n is 0.
EquivalenceResult check_equivalence(const Function& original, const Function& transformed, std::size_t n,
                                    std::uint64_t seed, std::uint64_t fuel = kDefaultFuel);

} // namespace revec
