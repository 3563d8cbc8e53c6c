#include "revec/verify.hpp"

#include "revec/intrinsics.hpp"

#include <algorithm>
#include <set>

namespace revec {

std::string to_string(const Diagnostic& d) {
  std::string s = d.rule + ": " + d.message;
  if (!d.block.empty()) s += " (block " + d.block + ")";
  if (d.inst != kNoValue) s += " [inst %" + std::to_string(d.inst) + "]";
  return s;
}

DominatorTree::DominatorTree(const Function& fn) {
  if (fn.blocks.empty()) return;
  // Reachability first so unreachable blocks do not poison the meet.
  std::set<std::string> reach;
  std::vector<std::string> work{fn.blocks.front().label};
  while (!work.empty()) {
    std::string b = work.back();
    work.pop_back();
    if (!reach.insert(b).second) continue;
    if (const BasicBlock* bb = fn.find_block(b))
      for (auto& s : bb->successors())
        if (fn.find_block(s)) work.push_back(s);
  }
  std::vector<std::string> all;
  for (const auto& b : fn.blocks)
    if (reach.count(b.label)) all.push_back(b.label);
  std::sort(all.begin(), all.end());

  const std::string& entry = fn.blocks.front().label;
  for (const auto& b : all) doms_[b] = (b == entry) ? std::vector<std::string>{entry} : all;

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& b : fn.blocks) {
      if (b.label == entry || !reach.count(b.label)) continue;
      std::vector<std::string> meet;
      bool first = true;
      for (const auto& p : fn.predecessors(b.label)) {
        if (!reach.count(p)) continue;
        const auto& pd = doms_[p];
        if (first) {
          meet = pd;
          first = false;
        } else {
          std::vector<std::string> tmp;
          std::set_intersection(meet.begin(), meet.end(), pd.begin(), pd.end(), std::back_inserter(tmp));
          meet = std::move(tmp);
        }
      }
      if (!std::binary_search(meet.begin(), meet.end(), b.label))
        meet.insert(std::upper_bound(meet.begin(), meet.end(), b.label), b.label);
      if (meet != doms_[b.label]) {
        doms_[b.label] = std::move(meet);
        changed = true;
      }
    }
  }
}

bool DominatorTree::dominates(const std::string& a, const std::string& b) const {
  auto it = doms_.find(b);
  if (it == doms_.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), a);
}

bool DominatorTree::value_dominates_use(const Function& fn, ValueId def, ValueId user,
                                        const std::string* incoming) const {
  if (fn.find_param(def)) return true;
  auto dloc = fn.locate(def);
  auto uloc = fn.locate(user);
  if (!dloc || !uloc) return false;
  const std::string& dblock = fn.blocks[dloc->first].label;
  if (incoming) {
    // Phi use: the definition must be available at the end of the incoming block.
    if (dblock == *incoming) return true;
    return dominates(dblock, *incoming);
  }
  if (dloc->first == uloc->first) return dloc->second < uloc->second;
  return dominates(dblock, fn.blocks[uloc->first].label);
}

namespace {

class Verifier {
public:
  explicit Verifier(const Function& fn) : fn_(fn), dom_(fn) {}

  std::vector<Diagnostic> run() {
    if (fn_.blocks.empty()) {
      report(kNoValue, "", "structure", "function @" + fn_.name + " has no blocks");
      return diags_;
    }
    check_ids_and_labels();
    if (!fn_.predecessors(fn_.blocks.front().label).empty())
      report(kNoValue, fn_.blocks.front().label, "cfg", "entry block has predecessors");
    for (const auto& b : fn_.blocks) check_block(b);
    return diags_;
  }

private:
  void report(ValueId id, const std::string& block, std::string rule, std::string msg) {
    diags_.push_back({id, block, std::move(rule), std::move(msg)});
  }

  void check_ids_and_labels() {
    std::set<std::string> labels;
    for (const auto& b : fn_.blocks)
      if (!labels.insert(b.label).second) report(kNoValue, b.label, "cfg", "duplicate block label " + b.label);
    for (const auto& p : fn_.params) {
      if (!defined_.insert(p.id).second) report(p.id, "", "ssa", "value defined more than once");
      if (p.type.is_void() || p.type.is_vector())
        report(p.id, "", "type", "parameter %" + p.name + " must be a scalar or pointer");
    }
    for (const auto& b : fn_.blocks)
      for (const auto& i : b.insts)
        if (i.id == kNoValue || !defined_.insert(i.id).second)
          report(i.id, b.label, "ssa", "instruction id missing or defined more than once");
  }

  void check_block(const BasicBlock& b) {
    if (b.insts.empty() || !is_terminator(b.insts.back().op)) {
      report(kNoValue, b.label, "cfg", "block does not end in a terminator");
    }
    bool past_phis = false;
    for (std::size_t k = 0; k < b.insts.size(); ++k) {
      const Instruction& inst = b.insts[k];
      if (is_terminator(inst.op) && k + 1 != b.insts.size())
        report(inst.id, b.label, "cfg", "terminator in the middle of a block");
      if (inst.op == Opcode::Phi) {
        if (past_phis) report(inst.id, b.label, "phi", "phi after non-phi instruction");
      } else {
        past_phis = true;
      }
      check_operands(b, inst);
      check_types(b, inst);
    }
  }

  void check_operands(const BasicBlock& b, const Instruction& inst) {
    for (std::size_t k = 0; k < inst.operands.size(); ++k) {
      ValueId v = inst.operands[k];
      if (!defined_.count(v)) {
        report(inst.id, b.label, "ssa", "use of undefined value %" + std::to_string(v));
        continue;
      }
      if (!dom_.reachable(b.label)) continue;
      const std::string* incoming = nullptr;
      if (inst.op == Opcode::Phi && k < inst.labels.size()) incoming = &inst.labels[k];
      if (incoming && !dom_.reachable(*incoming)) continue;
      if (!dom_.value_dominates_use(fn_, v, inst.id, incoming))
        report(inst.id, b.label, "dominance", "use of %" + std::to_string(v) + " not dominated by its definition");
    }
  }

  std::optional<Type> operand_type(const Instruction& inst, std::size_t k) const {
    if (k >= inst.operands.size()) return std::nullopt;
    return fn_.type_of(inst.operands[k]);
  }

  bool expect_arity(const BasicBlock& b, const Instruction& inst, std::size_t n) {
    if (inst.operands.size() == n) return true;
    report(inst.id, b.label, "arity",
           std::string(opcode_name(inst.op)) + " expects " + std::to_string(n) + " operands");
    return false;
  }

  void check_types(const BasicBlock& b, const Instruction& inst) {
    const Type& t = inst.type;
    auto bad = [&](const std::string& msg) { report(inst.id, b.label, "type", msg); };
    if (t.is_vector() && !is_legal_vector_bits(t.total_bits()))
      report(inst.id, b.label, "width", "vector value " + to_string(t) + " is not 128, 256 or 512 bits wide");
    if (t.is_vector() && t.elem.kind == ScalarKind::I1) bad("vectors of i1 are not supported");

    if (is_binary_op(inst.op)) {
      if (!expect_arity(b, inst, 2)) return;
      if (!(t.is_scalar() || t.is_vector())) return bad("binary op must produce a scalar or vector");
      for (std::size_t k = 0; k < 2; ++k) {
        auto ot = operand_type(inst, k);
        if (ot && !(*ot == t)) bad("operand type " + to_string(*ot) + " does not match " + to_string(t));
      }
      bool float_ok = inst.op == Opcode::Add || inst.op == Opcode::Sub || inst.op == Opcode::Mul;
      if (t.elem.is_float() && !float_ok) bad(std::string(opcode_name(inst.op)) + " is not defined on f32");
      return;
    }
    switch (inst.op) {
    case Opcode::ICmp: {
      if (!expect_arity(b, inst, 2)) return;
      auto a = operand_type(inst, 0), c = operand_type(inst, 1);
      if (!a || !c) return;
      if (!(*a == *c)) bad("icmp operand types differ");
      if (a->elem.is_float() || !(a->is_scalar() || a->is_vector())) bad("icmp expects integer operands");
      Type want = a->is_vector() ? *a : Type::scalar(ScalarKind::I1);
      if (!(t == want)) bad("icmp result must be " + to_string(want));
      return;
    }
    case Opcode::Select: {
      if (!expect_arity(b, inst, 3)) return;
      auto c = operand_type(inst, 0);
      if (c && !(*c == Type::scalar(ScalarKind::I1) || (t.is_vector() && *c == t)))
        bad("select condition must be i1 or a lane mask of the result type");
      for (std::size_t k = 1; k < 3; ++k) {
        auto ot = operand_type(inst, k);
        if (ot && !(*ot == t)) bad("select operand type mismatch");
      }
      return;
    }
    case Opcode::Const:
      if (!inst.operands.empty()) bad("const takes no operands");
      if (!(t.is_scalar() || t.is_vector())) return bad("const must be scalar or vector");
      if (inst.constant.size() != t.lanes()) bad("constant payload has wrong lane count");
      return;
    case Opcode::Load: {
      if (!expect_arity(b, inst, 1)) return;
      auto p = operand_type(inst, 0);
      if (p && !p->is_ptr()) bad("load address must be a pointer");
      if (!(t.is_scalar() || t.is_vector())) bad("load must produce a scalar or vector");
      return;
    }
    case Opcode::Store: {
      if (!expect_arity(b, inst, 2)) return;
      if (!t.is_void()) bad("store has no result");
      auto v = operand_type(inst, 0), p = operand_type(inst, 1);
      if (v && !(v->is_scalar() || v->is_vector())) bad("stored value must be a scalar or vector");
      if (p && !p->is_ptr()) bad("store address must be a pointer");
      return;
    }
    case Opcode::PtrAdd: {
      if (!expect_arity(b, inst, 2)) return;
      auto p = operand_type(inst, 0), i = operand_type(inst, 1);
      if (p && !p->is_ptr()) bad("ptradd base must be a pointer");
      if (i && !(i->is_scalar() && i->elem.is_integer() && i->elem.kind != ScalarKind::I1))
        bad("ptradd index must be an integer scalar");
      if (p && !(t == *p)) bad("ptradd result must have the base pointer type");
      return;
    }
    case Opcode::Phi: {
      if (inst.operands.size() != inst.labels.size()) bad("phi operand/label count mismatch");
      for (std::size_t k = 0; k < inst.operands.size(); ++k) {
        auto ot = operand_type(inst, k);
        if (ot && !(*ot == t)) bad("phi incoming type mismatch");
      }
      auto preds = fn_.predecessors(b.label);
      std::set<std::string> uniq(inst.labels.begin(), inst.labels.end());
      if (uniq.size() != inst.labels.size() || std::set<std::string>(preds.begin(), preds.end()) != uniq)
        report(inst.id, b.label, "phi", "phi incoming labels do not match CFG predecessors");
      return;
    }
    case Opcode::Shuffle: {
      if (!expect_arity(b, inst, 2)) return;
      auto a = operand_type(inst, 0), c = operand_type(inst, 1);
      if (!a || !c) return;
      if (!a->is_vector() || !(*a == *c)) return bad("shuffle operands must be vectors of one type");
      const int bound = static_cast<int>(a->count * 2);
      for (int m : inst.mask)
        if (m != kUndefLane && (m < 0 || m >= bound)) {
          report(inst.id, b.label, "shuffle", "mask index out of range");
          break;
        }
      if (!(t == a->with_count(static_cast<unsigned>(inst.mask.size()))))
        bad("shuffle result must be <mask length x operand element>");
      return;
    }
    case Opcode::Call: {
      const IntrinsicSignature* sig = find_intrinsic(inst.callee);
      if (!sig) return report(inst.id, b.label, "call", "unknown intrinsic @" + inst.callee);
      if (!expect_arity(b, inst, sig->operands.size())) return;
      for (std::size_t k = 0; k < sig->operands.size(); ++k) {
        auto ot = operand_type(inst, k);
        if (ot && !(*ot == sig->operands[k])) bad("intrinsic operand type mismatch for @" + inst.callee);
      }
      if (!(t == sig->result)) bad("intrinsic result type mismatch for @" + inst.callee);
      return;
    }
    case Opcode::Bitcast: {
      if (!expect_arity(b, inst, 1)) return;
      auto s = operand_type(inst, 0);
      if (s && (!s->is_vector() || !t.is_vector() || s->total_bits() != t.total_bits()))
        bad("bitcast must map a vector to a vector of the same width");
      return;
    }
    case Opcode::ExtractSubvec: {
      if (!expect_arity(b, inst, 1)) return;
      auto s = operand_type(inst, 0);
      if (s && (!s->is_vector() || !t.is_vector() || !(s->elem == t.elem) || inst.offset + t.count > s->count))
        bad("extract_subvec selects lanes outside its source");
      return;
    }
    case Opcode::Br:
      if (inst.labels.size() != 1 || !inst.operands.empty()) bad("br takes one target");
      check_targets(b, inst);
      return;
    case Opcode::CondBr: {
      if (inst.labels.size() != 2 || !expect_arity(b, inst, 1)) return bad("condbr takes a condition and two targets");
      auto c = operand_type(inst, 0);
      if (c && !(*c == Type::scalar(ScalarKind::I1))) bad("condbr condition must be i1");
      check_targets(b, inst);
      return;
    }
    case Opcode::Ret:
      if (inst.operands.size() > 1) bad("ret takes at most one value");
      if (fn_.return_type) {
        auto v = operand_type(inst, 0);
        if (!v || !(*v == *fn_.return_type)) bad("ret value does not match the function return type");
      } else if (!inst.operands.empty()) {
        bad("ret with a value in a function without a return type");
      }
      return;
    default: return;
    }
  }

  void check_targets(const BasicBlock& b, const Instruction& inst) {
    for (const auto& l : inst.labels)
      if (!fn_.find_block(l)) report(inst.id, b.label, "cfg", "branch to unknown block " + l);
    if (!fn_.blocks.empty())
      for (const auto& l : inst.labels)
        if (l == fn_.blocks.front().label) report(inst.id, b.label, "cfg", "branch to the entry block");
  }

  const Function& fn_;
  DominatorTree dom_;
  std::set<ValueId> defined_;
  std::vector<Diagnostic> diags_;
};

} // namespace

std::vector<Diagnostic> verify(const Function& fn) { return Verifier(fn).run(); }

std::vector<Diagnostic> verify(const ProgramModule& m) {
  std::vector<Diagnostic> all;
  std::set<std::string> names;
  for (const auto& f : m.functions) {
    if (!names.insert(f.name).second) all.push_back({kNoValue, "", "module", "duplicate function @" + f.name});
    for (auto& d : verify(f)) {
      d.message = "@" + f.name + ": " + d.message;
      all.push_back(std::move(d));
    }
  }
  return all;
}

void replace_all_uses_in_place(Function& fn, ValueId old_value, ValueId new_value) {
  if (old_value == new_value) return;
  auto users = fn.users(old_value);
  if (users.empty()) return;
  auto to = fn.type_of(old_value), tn = fn.type_of(new_value);
  if (!to || !tn || !(*to == *tn)) throw IrError("replace_all_uses: type mismatch");
  DominatorTree dom(fn);
  for (ValueId u : users) {
    const Instruction* ui = fn.find_inst(u);
    for (std::size_t k = 0; k < ui->operands.size(); ++k) {
      if (ui->operands[k] != old_value) continue;
      const std::string* incoming = ui->op == Opcode::Phi ? &ui->labels[k] : nullptr;
      if (!dom.value_dominates_use(fn, new_value, u, incoming))
        throw IrError("replace_all_uses: %" + std::to_string(new_value) + " does not dominate use in %" +
                      std::to_string(u));
    }
  }
  for (auto& b : fn.blocks)
    for (auto& i : b.insts)
      std::replace(i.operands.begin(), i.operands.end(), old_value, new_value);
}

Function replace_all_uses(Function fn, ValueId old_value, ValueId new_value) {
  replace_all_uses_in_place(fn, old_value, new_value);
  return fn;
}

std::size_t erase_dead_in_place(Function& fn) {
  std::size_t erased = 0;
  for (;;) {
    std::multiset<ValueId> used;
    for (const auto& b : fn.blocks)
      for (const auto& i : b.insts) used.insert(i.operands.begin(), i.operands.end());
    std::size_t before = erased;
    for (auto& b : fn.blocks) {
      auto it = std::remove_if(b.insts.begin(), b.insts.end(), [&](const Instruction& i) {
        return !has_side_effects(i.op) && !used.count(i.id);
      });
      erased += static_cast<std::size_t>(b.insts.end() - it);
      b.insts.erase(it, b.insts.end());
    }
    if (erased == before) return erased;
  }
}

Function erase_dead(Function fn) {
  erase_dead_in_place(fn);
  return fn;
}

} // namespace revec
