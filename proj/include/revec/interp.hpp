#pragma once

#include "revec/ir.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace revec {

/// A runtime value: one raw bit pattern per lane, truncated to the element
/// width. Pointers carry the parameter they derive from and an element index.
struct RtValue {
  Type type;
  std::vector<std::uint64_t> lanes;
  std::string base; // pointers only

  static RtValue scalar(ScalarType t, std::uint64_t bits);
  static RtValue vector(Type t, std::vector<std::uint64_t> lanes);
  friend bool operator==(const RtValue& a, const RtValue& b) {
    return a.type == b.type && a.lanes == b.lanes && a.base == b.base;
  }
};

/// Contents of one pointer parameter.
struct Buffer {
  ScalarType elem;
  std::vector<std::uint8_t> bytes;

  Buffer() = default;
  Buffer(ScalarType e, std::size_t length) : elem(e), bytes(length * e.bytes(), 0) {}
  std::size_t length() const { return bytes.size() / elem.bytes(); }
  std::uint64_t get(std::size_t i) const;
  void set(std::size_t i, std::uint64_t bits);
  friend bool operator==(const Buffer&, const Buffer&) = default;
};

/// Pointer parameter name -> buffer.
struct MemoryImage {
  std::map<std::string, Buffer> buffers;
  friend bool operator==(const MemoryImage&, const MemoryImage&) = default;
};

/// Dynamic counts gathered during evaluation.
struct ExecTrace {
  /// (opcode name, result width in bits) -> executed count. Stores are keyed
  /// by the width of the stored value; terminators and void ops by 0.
  std::map<std::pair<std::string, unsigned>, std::uint64_t> counts;
  std::uint64_t total = 0;
  /// Block label -> number of times entered.
  std::map<std::string, std::uint64_t> block_visits;
  /// Block label -> vector instructions executed inside it.
  std::map<std::string, std::uint64_t> vector_ops_by_block;
};

class EvalError : public std::runtime_error {
public:
  enum class Kind { OutOfBounds, FuelExhausted, UnknownIntrinsic, BadArguments, Malformed };
  EvalError(Kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct EvalResult {
  std::optional<RtValue> ret;
  MemoryImage memory;
  ExecTrace trace;
};

inline constexpr std::uint64_t kDefaultFuel = 100'000'000;

/// Runs `fn`. `scalars` binds the non-pointer parameters by name, `memory`
/// binds every pointer parameter.
EvalResult eval_function(const Function& fn, const std::map<std::string, RtValue>& scalars, MemoryImage memory,
                         std::uint64_t fuel = kDefaultFuel);

/// Applies a seeded intrinsic. Wider variants run the 128-bit procedure on
/// each 128-bit lane independently.
RtValue eval_intrinsic(const std::string& name, const std::vector<RtValue>& operands);

struct DynamicSummary {
  std::map<std::pair<std::string, unsigned>, std::uint64_t> counts;
  std::uint64_t total = 0;
  /// Vector instructions (result or stored value of vector type) by width.
  std::map<unsigned, std::uint64_t> vector_ops_by_width;
  std::uint64_t vector_ops = 0;

  /// Vector ops at `narrow_bits` divided by vector ops at `wide_bits`
  /// (0 when there are none at the wide width).
  double ratio(unsigned narrow_bits, unsigned wide_bits) const;
};

DynamicSummary count_dynamic_ops(const ExecTrace& trace);

/// Sign-extends the low `bits` of `v`.
std::int64_t sext(std::uint64_t v, unsigned bits);
std::uint64_t truncate(std::uint64_t v, unsigned bits);

} // namespace revec
