#pragma once

#include "revec/types.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace revec {

using ValueId = std::int32_t;
inline constexpr ValueId kNoValue = -1;

/// Undef entry of a shuffle mask (printed `u`).
inline constexpr int kUndefLane = -1;

enum class Opcode : std::uint8_t {
  Add, Sub, Mul, And, Or, Xor, Shl, LShr, AShr, SMin, SMax, UMin, UMax,
  ICmp, Select, Const, Load, Store, PtrAdd, Phi, Shuffle, Call, Bitcast, ExtractSubvec,
  Br, CondBr, Ret,
};

enum class ICmpPred : std::uint8_t { Eq, Ne, Slt, Sle, Sgt, Sge, Ult, Ule, Ugt, Uge };

std::string_view opcode_name(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view name);
std::string_view pred_name(ICmpPred p);
std::optional<ICmpPred> pred_from_name(std::string_view name);

bool is_binary_op(Opcode op);
bool is_terminator(Opcode op);
/// Elementwise ops that widen by reusing the opcode at a wider type.
bool is_liftable(Opcode op);
/// Instructions that erase_dead never removes.
bool has_side_effects(Opcode op);
/// Commutative + associative over two's complement wraparound integers.
bool is_associative(Opcode op);

/// One constant lane; nullopt is an undef lane. Integer lanes hold the raw
/// bit pattern truncated to the element width, f32 lanes hold IEEE bits.
using ConstLane = std::optional<std::uint64_t>;

struct Instruction {
  ValueId id = kNoValue;
  Opcode op = Opcode::Add;
  /// Result type; void for store and terminators.
  Type type;
  std::vector<ValueId> operands;

  ICmpPred pred = ICmpPred::Eq;
  std::string callee;                  // call
  std::vector<int> mask;               // shuffle
  std::vector<ConstLane> constant;     // const
  std::uint32_t offset = 0;            // extract_subvec: first lane
  std::vector<std::string> labels;     // phi incoming blocks / branch targets

  bool has_result() const { return !type.is_void(); }
};

struct BasicBlock {
  std::string label;
  std::vector<Instruction> insts;

  const Instruction* terminator() const {
    return !insts.empty() && is_terminator(insts.back().op) ? &insts.back() : nullptr;
  }
  std::vector<std::string> successors() const;
};

struct Param {
  std::string name;
  Type type;
  ValueId id = kNoValue;
};

struct Function {
  std::string name;
  std::vector<Param> params;
  std::optional<Type> return_type;
  /// Permits reassociation of f32 add (reduction splitting on floats).
  bool reassoc = false;
  std::vector<BasicBlock> blocks;
  ValueId next_id = 0;

  ValueId fresh_id() { return next_id++; }

  BasicBlock* find_block(std::string_view label);
  const BasicBlock* find_block(std::string_view label) const;
  int block_index(std::string_view label) const;

  const Param* find_param(ValueId id) const;
  /// Locates the instruction with the given id; nullptr for params or unknown ids.
  const Instruction* find_inst(ValueId id) const;
  Instruction* find_inst(ValueId id);
  /// (block index, instruction index) of an instruction.
  std::optional<std::pair<int, int>> locate(ValueId id) const;
  /// Type of a parameter or instruction result.
  std::optional<Type> type_of(ValueId id) const;

  std::vector<std::string> predecessors(std::string_view label) const;
  /// Instructions (by id) that use `value` as an operand.
  std::vector<ValueId> users(ValueId value) const;
  std::size_t use_count(ValueId value) const;

  /// Inserts `inst` before the instruction `before` (same block).
  void insert_before(ValueId before, Instruction inst);
  void insert_after(ValueId after, Instruction inst);
  /// Inserts before the terminator of `label`.
  void insert_at_end(std::string_view label, Instruction inst);
  /// Inserts after the phi prefix of `label`.
  void insert_after_phis(std::string_view label, Instruction inst);
  void erase(ValueId id);
  std::string fresh_label(std::string_view base) const;
};

struct ProgramModule {
  std::optional<std::string> target_hint;
  std::vector<Function> functions;

  const Function* find_function(std::string_view name) const;
};

/// Errors raised by IR mutation helpers when a precondition does not hold.
class IrError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Structural equality up to canonical renaming of SSA ids.
bool structurally_equal(const Function& a, const Function& b);
bool structurally_equal(const ProgramModule& a, const ProgramModule& b);

} // namespace revec
