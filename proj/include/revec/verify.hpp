#pragma once

#include "revec/ir.hpp"

#include <map>
#include <string>
#include <vector>

namespace revec {

struct Diagnostic {
  /// Offending instruction, or kNoValue for block/function level problems.
  ValueId inst = kNoValue;
  std::string block;
  std::string rule;
  std::string message;
};

std::string to_string(const Diagnostic& d);

/// Block-level dominator sets computed with the classic iterative data-flow
/// algorithm; functions in this IR have a handful of blocks.
class DominatorTree {
public:
  explicit DominatorTree(const Function& fn);

  bool reachable(const std::string& label) const { return doms_.count(label) != 0; }
  /// True if `a` dominates `b` (reflexive).
  bool dominates(const std::string& a, const std::string& b) const;
  /// Instruction-level dominance: does the definition of `def` dominate a use
  /// by instruction `user`? Phi uses are checked at the end of `incoming`.
  bool value_dominates_use(const Function& fn, ValueId def, ValueId user,
                           const std::string* incoming = nullptr) const;

private:
  std::map<std::string, std::vector<std::string>> doms_;
};

std::vector<Diagnostic> verify(const Function& fn);
std::vector<Diagnostic> verify(const ProgramModule& m);

/// Rewrites every use of `old_value` to `new_value`. Throws IrError on a type
/// mismatch or when the new definition does not dominate a use.
Function replace_all_uses(Function fn, ValueId old_value, ValueId new_value);
void replace_all_uses_in_place(Function& fn, ValueId old_value, ValueId new_value);

/// Removes side-effect-free instructions without uses until a fixpoint.
Function erase_dead(Function fn);
std::size_t erase_dead_in_place(Function& fn);

} // namespace revec
