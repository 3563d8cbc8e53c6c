#include "revec/ir.hpp"

#include <algorithm>
#include <array>
#include <map>

namespace revec {

namespace {

constexpr std::array<std::pair<ScalarKind, std::string_view>, 10> kScalarNames{{
    {ScalarKind::I1, "i1"},
    {ScalarKind::I8, "i8"},
    {ScalarKind::U8, "u8"},
    {ScalarKind::I16, "i16"},
    {ScalarKind::U16, "u16"},
    {ScalarKind::I32, "i32"},
    {ScalarKind::U32, "u32"},
    {ScalarKind::I64, "i64"},
    {ScalarKind::U64, "u64"},
    {ScalarKind::F32, "f32"},
}};

constexpr std::array<std::pair<Opcode, std::string_view>, 27> kOpcodeNames{{
    {Opcode::Add, "add"},
    {Opcode::Sub, "sub"},
    {Opcode::Mul, "mul"},
    {Opcode::And, "and"},
    {Opcode::Or, "or"},
    {Opcode::Xor, "xor"},
    {Opcode::Shl, "shl"},
    {Opcode::LShr, "lshr"},
    {Opcode::AShr, "ashr"},
    {Opcode::SMin, "smin"},
    {Opcode::SMax, "smax"},
    {Opcode::UMin, "umin"},
    {Opcode::UMax, "umax"},
    {Opcode::ICmp, "icmp"},
    {Opcode::Select, "select"},
    {Opcode::Const, "const"},
    {Opcode::Load, "load"},
    {Opcode::Store, "store"},
    {Opcode::PtrAdd, "ptradd"},
    {Opcode::Phi, "phi"},
    {Opcode::Shuffle, "shuffle"},
    {Opcode::Call, "call"},
    {Opcode::Bitcast, "bitcast"},
    {Opcode::ExtractSubvec, "extract_subvec"},
    {Opcode::Br, "br"},
    {Opcode::CondBr, "condbr"},
    {Opcode::Ret, "ret"},
}};

constexpr std::array<std::pair<ICmpPred, std::string_view>, 10> kPredNames{{
    {ICmpPred::Eq, "eq"},
    {ICmpPred::Ne, "ne"},
    {ICmpPred::Slt, "slt"},
    {ICmpPred::Sle, "sle"},
    {ICmpPred::Sgt, "sgt"},
    {ICmpPred::Sge, "sge"},
    {ICmpPred::Ult, "ult"},
    {ICmpPred::Ule, "ule"},
    {ICmpPred::Ugt, "ugt"},
    {ICmpPred::Uge, "uge"},
}};

template <typename Table, typename Key>
auto name_of(const Table& table, Key key) -> std::string_view {
  for (const auto& [k, name] : table)
    if (k == key) return name;
  return "?";
}

template <typename Table>
auto key_of(const Table& table, std::string_view name) -> std::optional<decltype(table[0].first)> {
  for (const auto& [k, n] : table)
    if (n == name) return k;
  return std::nullopt;
}

} // namespace

std::string_view scalar_name(ScalarType t) { return name_of(kScalarNames, t.kind); }

std::optional<ScalarType> scalar_from_name(std::string_view name) {
  if (auto k = key_of(kScalarNames, name)) return ScalarType{*k};
  return std::nullopt;
}

std::string to_string(const Type& t) {
  switch (t.shape) {
  case Type::Shape::Void: return "void";
  case Type::Shape::Scalar: return std::string(scalar_name(t.elem));
  case Type::Shape::Vector:
    return "<" + std::to_string(t.count) + " x " + std::string(scalar_name(t.elem)) + ">";
  case Type::Shape::Ptr: return "ptr<" + std::string(scalar_name(t.elem)) + ">";
  }
  return "?";
}

std::string_view opcode_name(Opcode op) { return name_of(kOpcodeNames, op); }
std::optional<Opcode> opcode_from_name(std::string_view name) { return key_of(kOpcodeNames, name); }
std::string_view pred_name(ICmpPred p) { return name_of(kPredNames, p); }
std::optional<ICmpPred> pred_from_name(std::string_view name) { return key_of(kPredNames, name); }

bool is_binary_op(Opcode op) { return op <= Opcode::UMax; }

bool is_terminator(Opcode op) { return op == Opcode::Br || op == Opcode::CondBr || op == Opcode::Ret; }

bool is_liftable(Opcode op) { return is_binary_op(op) || op == Opcode::ICmp || op == Opcode::Select; }

bool has_side_effects(Opcode op) { return op == Opcode::Store || op == Opcode::Call || is_terminator(op); }

bool is_associative(Opcode op) {
  switch (op) {
  case Opcode::Add:
  case Opcode::Mul:
  case Opcode::And:
  case Opcode::Or:
  case Opcode::Xor:
  case Opcode::SMin:
  case Opcode::SMax:
  case Opcode::UMin:
  case Opcode::UMax: return true;
  default: return false;
  }
}

std::vector<std::string> BasicBlock::successors() const {
  if (const Instruction* t = terminator(); t && t->op != Opcode::Ret) return t->labels;
  return {};
}

BasicBlock* Function::find_block(std::string_view label) {
  for (auto& b : blocks)
    if (b.label == label) return &b;
  return nullptr;
}

const BasicBlock* Function::find_block(std::string_view label) const {
  return const_cast<Function*>(this)->find_block(label);
}

int Function::block_index(std::string_view label) const {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].label == label) return static_cast<int>(i);
  return -1;
}

const Param* Function::find_param(ValueId id) const {
  for (const auto& p : params)
    if (p.id == id) return &p;
  return nullptr;
}

const Instruction* Function::find_inst(ValueId id) const { return const_cast<Function*>(this)->find_inst(id); }

Instruction* Function::find_inst(ValueId id) {
  if (id == kNoValue) return nullptr;
  for (auto& b : blocks)
    for (auto& i : b.insts)
      if (i.id == id) return &i;
  return nullptr;
}

std::optional<std::pair<int, int>> Function::locate(ValueId id) const {
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t i = 0; i < blocks[b].insts.size(); ++i)
      if (blocks[b].insts[i].id == id) return std::pair{static_cast<int>(b), static_cast<int>(i)};
  return std::nullopt;
}

std::optional<Type> Function::type_of(ValueId id) const {
  if (const Param* p = find_param(id)) return p->type;
  if (const Instruction* i = find_inst(id); i && i->has_result()) return i->type;
  return std::nullopt;
}

std::vector<std::string> Function::predecessors(std::string_view label) const {
  std::vector<std::string> preds;
  for (const auto& b : blocks) {
    auto succ = b.successors();
    if (std::find(succ.begin(), succ.end(), label) != succ.end()) preds.push_back(b.label);
  }
  return preds;
}

std::vector<ValueId> Function::users(ValueId value) const {
  std::vector<ValueId> out;
  for (const auto& b : blocks)
    for (const auto& i : b.insts)
      if (std::find(i.operands.begin(), i.operands.end(), value) != i.operands.end()) out.push_back(i.id);
  return out;
}

std::size_t Function::use_count(ValueId value) const {
  std::size_t n = 0;
  for (const auto& b : blocks)
    for (const auto& i : b.insts)
      n += static_cast<std::size_t>(std::count(i.operands.begin(), i.operands.end(), value));
  return n;
}

void Function::insert_before(ValueId before, Instruction inst) {
  auto loc = locate(before);
  if (!loc) throw IrError("insert_before: unknown instruction %" + std::to_string(before));
  auto& insts = blocks[loc->first].insts;
  insts.insert(insts.begin() + loc->second, std::move(inst));
}

void Function::insert_after(ValueId after, Instruction inst) {
  auto loc = locate(after);
  if (!loc) throw IrError("insert_after: unknown instruction %" + std::to_string(after));
  auto& insts = blocks[loc->first].insts;
  insts.insert(insts.begin() + loc->second + 1, std::move(inst));
}

void Function::insert_at_end(std::string_view label, Instruction inst) {
  BasicBlock* b = find_block(label);
  if (!b) throw IrError("insert_at_end: unknown block " + std::string(label));
  auto pos = b->terminator() ? b->insts.end() - 1 : b->insts.end();
  b->insts.insert(pos, std::move(inst));
}

void Function::insert_after_phis(std::string_view label, Instruction inst) {
  BasicBlock* b = find_block(label);
  if (!b) throw IrError("insert_after_phis: unknown block " + std::string(label));
  auto pos = std::find_if(b->insts.begin(), b->insts.end(), [](const Instruction& i) { return i.op != Opcode::Phi; });
  b->insts.insert(pos, std::move(inst));
}

void Function::erase(ValueId id) {
  for (auto& b : blocks) {
    auto it = std::find_if(b.insts.begin(), b.insts.end(), [id](const Instruction& i) { return i.id == id; });
    if (it != b.insts.end()) {
      b.insts.erase(it);
      return;
    }
  }
}

std::string Function::fresh_label(std::string_view base) const {
  std::string label(base);
  for (int n = 1; find_block(label); ++n) label = std::string(base) + "." + std::to_string(n);
  return label;
}

const Function* ProgramModule::find_function(std::string_view name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

bool structurally_equal(const Function& a, const Function& b) {
  if (a.name != b.name || a.reassoc != b.reassoc || a.params.size() != b.params.size() ||
      a.blocks.size() != b.blocks.size() || a.return_type.has_value() != b.return_type.has_value())
    return false;
  if (a.return_type && !(*a.return_type == *b.return_type)) return false;

  // Canonical numbering: params first, then instructions in program order.
  std::map<ValueId, int> ca, cb;
  int n = 0;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name || !(a.params[i].type == b.params[i].type)) return false;
    ca[a.params[i].id] = n;
    cb[b.params[i].id] = n++;
  }
  for (std::size_t bi = 0; bi < a.blocks.size(); ++bi) {
    const auto& ba = a.blocks[bi];
    const auto& bb = b.blocks[bi];
    if (ba.label != bb.label || ba.insts.size() != bb.insts.size()) return false;
    for (std::size_t i = 0; i < ba.insts.size(); ++i) {
      ca[ba.insts[i].id] = n;
      cb[bb.insts[i].id] = n++;
    }
  }
  auto canon = [](const std::map<ValueId, int>& m, ValueId v) {
    auto it = m.find(v);
    return it == m.end() ? -1 : it->second;
  };
  for (std::size_t bi = 0; bi < a.blocks.size(); ++bi) {
    for (std::size_t i = 0; i < a.blocks[bi].insts.size(); ++i) {
      const Instruction& x = a.blocks[bi].insts[i];
      const Instruction& y = b.blocks[bi].insts[i];
      if (x.op != y.op || !(x.type == y.type) || x.operands.size() != y.operands.size() || x.callee != y.callee ||
          x.mask != y.mask || x.constant != y.constant || x.labels != y.labels || x.offset != y.offset)
        return false;
      if (x.op == Opcode::ICmp && x.pred != y.pred) return false;
      for (std::size_t k = 0; k < x.operands.size(); ++k)
        if (canon(ca, x.operands[k]) != canon(cb, y.operands[k])) return false;
    }
  }
  return true;
}

bool structurally_equal(const ProgramModule& a, const ProgramModule& b) {
  if (a.target_hint != b.target_hint || a.functions.size() != b.functions.size()) return false;
  for (std::size_t i = 0; i < a.functions.size(); ++i)
    if (!structurally_equal(a.functions[i], b.functions[i])) return false;
  return true;
}

} // namespace revec
