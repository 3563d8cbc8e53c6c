#pragma once

#include "revec/ir.hpp"
#include "revec/target.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace revec {

struct NaturalLoop {
  std::string header;
  std::string latch;
  std::vector<std::string> body; // header first, then function order
  std::string exit;              // block outside the loop reached from `exiting`
  std::string exiting;           // block inside the loop that branches to `exit`
  std::string preheader;         // sole predecessor of the header outside the loop
  ValueId iv = kNoValue;         // header phi
  ValueId iv_next = kNoValue;    // last constant increment feeding the back edge
  std::int64_t step = 0;         // total increment per trip
  std::optional<std::int64_t> init;
  std::optional<std::int64_t> trip_count;

  bool contains(const std::string& label) const;
  bool single_block() const { return body.size() == 1; }
};

/// Innermost loops in canonical form. Loops that were found but rejected
/// are described in `rejected` when it is non-null.
std::vector<NaturalLoop> find_inner_loops(const Function& fn, std::vector<std::string>* rejected = nullptr);

/// Linear form `c0 + sum(coef * symbol)` over SSA values, in elements of the
/// base pointer's element type. `opaque` addresses never chain.
struct AddressExpr {
  ValueId base = kNoValue;
  std::map<ValueId, std::int64_t> terms;
  std::int64_t c0 = 0;
  bool opaque = true;

  std::int64_t coefficient(ValueId sym) const {
    auto it = terms.find(sym);
    return it == terms.end() ? 0 : it->second;
  }
};

AddressExpr analyze_address(const Function& fn, ValueId ptr);

struct StoreChain {
  std::vector<ValueId> stores; // ascending offset
  ValueId base = kNoValue;
  ScalarType elem;
  unsigned sw = 0;  // bits per store
  unsigned scw = 0; // sw * stores.size()
  bool consecutive_across_iterations = false;
};

std::vector<StoreChain> analyze_store_chains(const Function& fn, const NaturalLoop& loop);

struct ReductionChain {
  ValueId phi = kNoValue;
  Opcode op = Opcode::Add;
  std::vector<ValueId> updates; // in dependence order; the last feeds the back edge
  std::uint64_t identity = 0;   // per-lane bit pattern
};

/// Recognizes `phi -> op -> op -> ... -> back edge` where every intermediate
/// value has a single use. `expected_updates` of 0 accepts any length.
std::optional<ReductionChain> detect_reduction(const Function& fn, const NaturalLoop& loop, ValueId phi,
                                               std::size_t expected_updates = 0);

/// Per-lane identity of an associative opcode on `t`.
std::optional<std::uint64_t> reduction_identity(Opcode op, ScalarType t);

inline constexpr unsigned kMaxUnrollFactor = 8;

unsigned compute_unroll_factor(const Function& fn, const NaturalLoop& loop, const TargetDesc& target);

struct UnrollResult {
  Function fn;
  bool applied = false;
  std::string diagnostic;
  std::string remainder_header; // empty when the trip count divides evenly
  std::int64_t main_trips = 0;
  std::int64_t remainder_trips = 0;
};

UnrollResult unroll_loop(const Function& fn, const NaturalLoop& loop, unsigned uf);

struct SplitResult {
  Function fn;
  unsigned split = 0; // reductions split
  std::vector<std::string> diagnostics;
};

SplitResult split_reductions(const Function& fn, const NaturalLoop& loop, unsigned uf);

struct LoopReport {
  std::string header;
  unsigned unroll_factor = 1;
  bool unrolled = false;
  std::int64_t main_trips = 0;
  std::int64_t remainder_trips = 0;
  unsigned reductions_split = 0;
  std::vector<std::string> notes;
};

struct PreprocessResult {
  Function fn;
  std::vector<LoopReport> loops;
  std::vector<std::string> rejected;
};

/// Unroll every innermost loop by its computed factor, then split reductions.
PreprocessResult preprocess(const Function& fn, const TargetDesc& target);

} // namespace revec
