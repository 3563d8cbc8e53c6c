#include "revec/preprocess.hpp"
#include "revec_internal.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace revec {

std::string_view pack_kind_name(PackKind k) {
  switch (k) {
  case PackKind::StoreRoot: return "store-root";
  case PackKind::PhiRoot: return "phi-root";
  case PackKind::LiftedOp: return "lifted-op";
  case PackKind::IntrinsicCall: return "intrinsic-call";
  case PackKind::Shuffle: return "shuffle";
  case PackKind::Load: return "load";
  case PackKind::GatherLeaf: return "gather-leaf";
  case PackKind::Constant: return "constant";
  case PackKind::Bitcast: return "bitcast";
  }
  return "?";
}

std::string_view pattern_name(ShufflePattern p) {
  switch (p) {
  case ShufflePattern::A: return "A";
  case ShufflePattern::B: return "B";
  case ShufflePattern::C: return "C";
  case ShufflePattern::D: return "D";
  case ShufflePattern::Gather: return "GATHER";
  }
  return "?";
}

bool PackNode::mergeable() const {
  switch (pack.kind) {
  case PackKind::StoreRoot:
  case PackKind::PhiRoot:
  case PackKind::LiftedOp:
  case PackKind::IntrinsicCall:
  case PackKind::Shuffle:
  case PackKind::Load: return true;
  default: return false;
  }
}

std::size_t RevecGraph::pack_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const PackNode& n) { return n.is_pack(); }));
}

std::map<std::string, int> RevecGraph::packs_by_kind() const {
  std::map<std::string, int> out;
  for (const auto& n : nodes)
    if (n.is_pack()) ++out[std::string(pack_kind_name(n.pack.kind))];
  return out;
}

namespace {

bool is_pow2(std::size_t x) { return x && !(x & (x - 1)); }

std::size_t floor_pow2(std::size_t x) {
  std::size_t p = 1;
  while (p * 2 <= x) p *= 2;
  return p;
}

/// Instruction positions of one function snapshot.
class Index {
public:
  explicit Index(const Function& fn) : fn_(fn) {
    for (std::size_t b = 0; b < fn.blocks.size(); ++b)
      for (std::size_t i = 0; i < fn.blocks[b].insts.size(); ++i)
        pos_[fn.blocks[b].insts[i].id] = {static_cast<int>(b), static_cast<int>(i)};
  }
  const Instruction* inst(ValueId id) const {
    auto it = pos_.find(id);
    return it == pos_.end() ? nullptr : &fn_.blocks[it->second.first].insts[it->second.second];
  }
  int block(ValueId id) const {
    auto it = pos_.find(id);
    return it == pos_.end() ? -1 : it->second.first;
  }
  int position(ValueId id) const {
    auto it = pos_.find(id);
    return it == pos_.end() ? -1 : it->second.second;
  }
  const Function& fn() const { return fn_; }

private:
  const Function& fn_;
  std::unordered_map<ValueId, std::pair<int, int>> pos_;
};

/// Chunks `items` into power-of-two packs of at most `vf_max` members.
template <typename T>
std::vector<std::vector<T>> chunk(const std::vector<T>& items, std::size_t vf_max) {
  std::vector<std::vector<T>> out;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t k = floor_pow2(std::min(vf_max, items.size() - i));
    if (k < 2) break;
    out.emplace_back(items.begin() + i, items.begin() + i + k);
    i += k;
  }
  return out;
}

/// Any store (or, for `loads_too`, load) to `base` strictly between
/// positions `from` and `to` of block `b`, other than the listed members.
bool memory_effect_between(const Function& fn, int b, int from, int to, ValueId base, bool loads_too,
                           const std::vector<ValueId>& members) {
  const auto& insts = fn.blocks[b].insts;
  for (int i = from + 1; i < to; ++i) {
    const Instruction& x = insts[i];
    if (std::find(members.begin(), members.end(), x.id) != members.end()) continue;
    ValueId addr = kNoValue;
    if (x.op == Opcode::Store) addr = x.operands.at(1);
    else if (loads_too && x.op == Opcode::Load) addr = x.operands.at(0);
    if (addr == kNoValue) continue;
    AddressExpr a = analyze_address(fn, addr);
    if (a.opaque || a.base == base) return true;
  }
  return false;
}

bool all_same(const std::vector<ValueId>& v) {
  return std::all_of(v.begin(), v.end(), [&](ValueId x) { return x == v[0]; });
}

bool is_const(const Function& fn, ValueId v) {
  const Instruction* i = fn.find_inst(v);
  return i && i->op == Opcode::Const;
}

} // namespace

std::vector<Pack> find_root_packs(const Function& fn, const std::string& block, const TargetDesc& target) {
  std::vector<Pack> roots;
  const int bi = fn.block_index(block);
  if (bi < 0) return roots;
  const BasicBlock& b = fn.blocks[bi];
  const unsigned vw = target.max_vector_bits;

  struct StoreInfo {
    ValueId id;
    std::int64_t offset;
    std::int64_t elems;
    int pos;
  };
  using Key = std::tuple<ValueId, std::map<ValueId, std::int64_t>, unsigned, unsigned>;
  std::map<Key, std::vector<StoreInfo>> groups;
  std::vector<Key> order;
  for (std::size_t i = 0; i < b.insts.size(); ++i) {
    const Instruction& s = b.insts[i];
    if (s.op != Opcode::Store) continue;
    auto vt = fn.type_of(s.operands[0]);
    if (!vt || !vt->is_vector()) continue;
    AddressExpr a = analyze_address(fn, s.operands[1]);
    if (a.opaque) continue;
    const unsigned pb = fn.find_param(a.base)->type.elem.bytes();
    if (vt->total_bytes() % pb) continue;
    Key key{a.base, a.terms, static_cast<unsigned>(vt->elem.kind), vt->count};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back({s.id, a.c0, static_cast<std::int64_t>(vt->total_bytes() / pb), static_cast<int>(i)});
  }

  std::vector<std::pair<int, Pack>> store_roots;
  for (const auto& key : order) {
    auto entries = groups[key];
    std::stable_sort(entries.begin(), entries.end(),
                     [](const StoreInfo& x, const StoreInfo& y) { return x.offset < y.offset; });
    const Type t = *fn.type_of(fn.find_inst(entries[0].id)->operands[0]);
    const std::size_t vf_max = vw / t.total_bits();
    std::size_t start = 0;
    for (std::size_t k = 1; k <= entries.size(); ++k) {
      if (k < entries.size() && entries[k].offset == entries[k - 1].offset + entries[k - 1].elems) continue;
      std::vector<StoreInfo> run(entries.begin() + start, entries.begin() + k);
      start = k;
      for (const auto& c : chunk(run, vf_max)) {
        Pack p;
        p.kind = PackKind::StoreRoot;
        p.narrow = t;
        int lo = c[0].pos, hi = c[0].pos;
        for (const auto& s : c) {
          p.members.push_back(s.id);
          lo = std::min(lo, s.pos);
          hi = std::max(hi, s.pos);
        }
        // Widening moves every member to the last one's position.
        if (memory_effect_between(fn, bi, lo, hi, std::get<0>(key), true, p.members)) continue;
        store_roots.emplace_back(lo, std::move(p));
      }
    }
  }
  std::stable_sort(store_roots.begin(), store_roots.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [pos, p] : store_roots) roots.push_back(std::move(p));

  std::vector<Type> phi_types;
  std::map<std::string, std::vector<ValueId>> phis_by_type;
  for (const auto& i : b.insts) {
    if (i.op != Opcode::Phi) break;
    if (!i.type.is_vector()) continue;
    std::string k = to_string(i.type);
    if (!phis_by_type.count(k)) phi_types.push_back(i.type);
    phis_by_type[k].push_back(i.id);
  }
  for (const auto& t : phi_types)
    for (const auto& c : chunk(phis_by_type[to_string(t)], vw / t.total_bits())) {
      Pack p;
      p.kind = PackKind::PhiRoot;
      p.narrow = t;
      p.members = c;
      roots.push_back(std::move(p));
    }
  return roots;
}

std::vector<int> remap_pattern_d(const std::vector<int>& mask, unsigned n, unsigned p, unsigned i) {
  std::vector<int> out;
  out.reserve(mask.size());
  const int ni = static_cast<int>(n);
  for (int idx : mask) {
    if (idx == kUndefLane) out.push_back(kUndefLane);
    else if (idx < ni) out.push_back(idx + ni * static_cast<int>(i - 1));
    else out.push_back(idx + ni * static_cast<int>(p - 1) + ni * static_cast<int>(i - 1));
  }
  return out;
}

std::vector<int> widen_mask_pattern_d(const std::vector<std::vector<int>>& masks, unsigned n) {
  std::vector<int> out;
  const unsigned p = static_cast<unsigned>(masks.size());
  for (unsigned i = 1; i <= p; ++i) {
    auto m = remap_pattern_d(masks[i - 1], n, p, i);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

namespace detail {

bool pattern_c_constants_on_left(const Function& fn, const std::vector<ValueId>& members) {
  std::vector<ValueId> left;
  for (ValueId m : members) left.push_back(fn.find_inst(m)->operands[0]);
  return !all_same(left);
}

std::optional<std::vector<ConstLane>> merge_pattern_c_constants(const Function& fn, const std::vector<ValueId>& members,
                                                                bool constants_on_left) {
  const Instruction* first = fn.find_inst(members[0]);
  const auto n = static_cast<int>(fn.type_of(first->operands[0])->lanes());
  const Instruction* c0 = fn.find_inst(first->operands[constants_on_left ? 0 : 1]);
  std::vector<ConstLane> merged(c0->constant.size());
  std::vector<bool> fixed(merged.size(), false);
  for (ValueId m : members) {
    const Instruction* s = fn.find_inst(m);
    const Instruction* c = fn.find_inst(s->operands[constants_on_left ? 0 : 1]);
    if (!c || c->op != Opcode::Const || c->constant.size() != merged.size()) return std::nullopt;
    for (int idx : s->mask) {
      if (idx == kUndefLane) continue;
      const bool on_left = idx < n;
      if (on_left != constants_on_left) continue;
      const auto lane = static_cast<std::size_t>(on_left ? idx : idx - n);
      if (lane >= merged.size() || !c->constant[lane]) return std::nullopt;
      if (fixed[lane] && merged[lane] != c->constant[lane]) return std::nullopt;
      merged[lane] = c->constant[lane];
      fixed[lane] = true;
    }
  }
  // Lanes no mask reads take any defined value, so the result stays a
  // plain constant rather than carrying undefs forward.
  for (std::size_t l = 0; l < merged.size(); ++l)
    if (!fixed[l])
      for (ValueId m : members) {
        const Instruction* c = fn.find_inst(fn.find_inst(m)->operands[constants_on_left ? 0 : 1]);
        if (c->constant[l]) {
          merged[l] = c->constant[l];
          break;
        }
      }
  return merged;
}

} // namespace detail

ShufflePattern classify_shuffle_pack(const Function& fn, const std::vector<ValueId>& members) {
  const std::size_t p = members.size();
  std::vector<ValueId> left, right;
  std::vector<std::vector<int>> masks;
  for (ValueId m : members) {
    const Instruction* s = fn.find_inst(m);
    if (!s || s->op != Opcode::Shuffle) return ShufflePattern::Gather;
    left.push_back(s->operands[0]);
    right.push_back(s->operands[1]);
    masks.push_back(s->mask);
  }
  const auto lt = fn.type_of(left[0]);
  const auto rt = fn.type_of(right[0]);
  if (!lt || !rt) return ShufflePattern::Gather;
  for (std::size_t i = 0; i < p; ++i)
    if (!(*fn.type_of(left[i]) == *lt) || !(*fn.type_of(right[i]) == *rt) || masks[i].size() != masks[0].size())
      return ShufflePattern::Gather;
  const unsigned n = lt->lanes();

  // A: slices of one source that together cover it in order.
  if (all_same(left) && masks[0].size() * p == n) {
    std::vector<int> cat;
    for (const auto& m : masks) cat.insert(cat.end(), m.begin(), m.end());
    bool seq = true;
    for (std::size_t k = 0; k < cat.size(); ++k) seq = seq && cat[k] == static_cast<int>(k);
    if (seq) return ShufflePattern::A;
  }
  if (all_same(left) && all_same(right)) return ShufflePattern::B;

  auto all_const = [&](const std::vector<ValueId>& col) {
    return std::all_of(col.begin(), col.end(), [&](ValueId v) { return is_const(fn, v); });
  };
  if ((all_same(left) && all_const(right) && detail::merge_pattern_c_constants(fn, members, false)) ||
      (all_same(right) && all_const(left) && detail::merge_pattern_c_constants(fn, members, true)))
    return ShufflePattern::C;

  const bool masks_equal = std::all_of(masks.begin(), masks.end(), [&](const auto& m) { return m == masks[0]; });
  if (all_const(left) || all_const(right) || all_same(left) || all_same(right) || masks_equal) {
    // Both operand columns are widened to p*n lanes; equal operand types are
    // required for the wide shuffle.
    if (*lt == *rt) return ShufflePattern::D;
  }
  return ShufflePattern::Gather;
}

namespace {

class Builder {
public:
  Builder(const Function& fn, const TargetDesc& target, const IntrinsicMap& imap)
      : fn_(fn), target_(target), imap_(imap), idx_(fn) {}

  RevecGraph run(const Pack& root) {
    bi_ = idx_.block(root.members.at(0));
    g_.block = fn_.blocks.at(bi_).label;
    PackNode n;
    n.pack = root;
    g_.nodes.push_back(std::move(n));
    by_members_[root.members] = 0;
    stack_.insert(0);
    expand(0);
    return std::move(g_);
  }

private:
  int visit(const std::vector<ValueId>& col, int parent) {
    if (auto it = by_members_.find(col); it != by_members_.end()) {
      int n = it->second;
      if (stack_.count(n)) g_.back_edges.emplace_back(parent, n);
      auto& ps = g_.nodes[n].parents;
      if (std::find(ps.begin(), ps.end(), parent) == ps.end()) ps.push_back(parent);
      return n;
    }
    PackNode node;
    node.pack.members = col;
    node.pack.narrow = fn_.type_of(col[0]).value_or(Type{});
    node.parents.push_back(parent);
    classify(node, parent);
    const int id = static_cast<int>(g_.nodes.size());
    g_.nodes.push_back(std::move(node));
    by_members_[col] = id;
    if (g_.nodes[id].rewritten()) {
      stack_.insert(id);
      expand(id);
      stack_.erase(id);
    }
    return id;
  }

  void expand(int id) {
    const Pack pack = g_.nodes[id].pack;
    const Instruction* first = idx_.inst(pack.members[0]);
    auto column = [&](std::size_t k) {
      std::vector<ValueId> col;
      for (ValueId m : pack.members) col.push_back(idx_.inst(m)->operands.at(k));
      return col;
    };
    std::vector<int> children(first->operands.size(), -1);
    std::vector<std::string> labels;
    switch (pack.kind) {
    case PackKind::StoreRoot: children[0] = visit(column(0), id); break;
    case PackKind::PhiRoot:
      for (std::size_t k = 0; k < first->labels.size(); ++k) {
        std::vector<ValueId> col;
        for (ValueId m : pack.members) {
          const Instruction* phi = idx_.inst(m);
          auto it = std::find(phi->labels.begin(), phi->labels.end(), first->labels[k]);
          col.push_back(phi->operands.at(static_cast<std::size_t>(it - phi->labels.begin())));
        }
        labels.push_back(first->labels[k]);
        children[k] = visit(col, id);
      }
      break;
    case PackKind::Shuffle:
      if (g_.nodes[id].pattern == ShufflePattern::D) {
        children[0] = visit(column(0), id);
        children[1] = visit(column(1), id);
      }
      break;
    case PackKind::Load: break;
    default:
      for (std::size_t k = 0; k < children.size(); ++k) children[k] = visit(column(k), id);
    }
    g_.nodes[id].children = std::move(children);
    g_.nodes[id].child_labels = std::move(labels);
  }

  void classify(PackNode& node, int parent) {
    const auto& col = node.pack.members;
    const std::size_t p = col.size();
    auto gather = [&] { node.pack.kind = PackKind::GatherLeaf; };
    gather();

    std::vector<const Instruction*> insts;
    for (ValueId v : col) {
      auto t = fn_.type_of(v);
      if (!t || !(*t == node.pack.narrow) || !t->is_vector()) return;
      insts.push_back(idx_.inst(v));
    }
    if (std::all_of(insts.begin(), insts.end(), [](const Instruction* i) { return i && i->op == Opcode::Const; })) {
      node.pack.kind = PackKind::Constant;
      return;
    }
    if (std::any_of(insts.begin(), insts.end(), [](const Instruction* i) { return !i; })) return;
    if (std::set<ValueId>(col.begin(), col.end()).size() != p) return;
    if (!is_pow2(p)) return;
    for (const auto* i : insts)
      if (idx_.block(i->id) != bi_ || i->op != insts[0]->op) return;
    if (p * node.pack.narrow.total_bits() > target_.max_vector_bits) return;

    const Instruction& f = *insts[0];
    PackKind kind;
    if (is_liftable(f.op)) {
      for (const auto* i : insts)
        if (i->op == Opcode::ICmp && i->pred != f.pred) return;
      if (f.op == Opcode::Select && !fn_.type_of(f.operands[0])->is_vector()) return;
      if (f.op == Opcode::ICmp && !(fn_.type_of(f.operands[0])->lanes() == f.type.lanes())) return;
      kind = PackKind::LiftedOp;
    } else if (f.op == Opcode::Call) {
      for (const auto* i : insts)
        if (i->callee != f.callee) return;
      auto wide = imap_.lookup(f.callee, static_cast<unsigned>(p));
      if (!wide || !target_.is_legal(*wide)) return;
      kind = PackKind::IntrinsicCall;
    } else if (f.op == Opcode::Load) {
      if (!consecutive_loads(insts)) return;
      kind = PackKind::Load;
    } else if (f.op == Opcode::Shuffle) {
      node.pattern = classify_shuffle_pack(fn_, col);
      if (*node.pattern == ShufflePattern::Gather) return;
      kind = PackKind::Shuffle;
    } else if (f.op == Opcode::Bitcast) {
      auto st = fn_.type_of(f.operands[0]);
      for (const auto* i : insts)
        if (!(*fn_.type_of(i->operands[0]) == *st)) return;
      kind = PackKind::Bitcast;
    } else {
      return;
    }
    if (!independent(col) || !schedulable(col, parent)) {
      node.pattern.reset();
      if (f.op == Opcode::Shuffle) node.pattern = ShufflePattern::Gather;
      return;
    }
    node.pack.kind = kind;
  }

  bool consecutive_loads(const std::vector<const Instruction*>& insts) {
    AddressExpr a0 = analyze_address(fn_, insts[0]->operands[0]);
    if (a0.opaque) return false;
    const unsigned pb = fn_.find_param(a0.base)->type.elem.bytes();
    const unsigned bytes = insts[0]->type.total_bytes();
    if (bytes % pb) return false;
    const std::int64_t elems = bytes / pb;
    int lo = idx_.position(insts[0]->id), hi = lo;
    std::vector<ValueId> members;
    for (std::size_t j = 0; j < insts.size(); ++j) {
      AddressExpr a = analyze_address(fn_, insts[j]->operands[0]);
      if (a.opaque || a.base != a0.base || a.terms != a0.terms || a.c0 != a0.c0 + static_cast<std::int64_t>(j) * elems)
        return false;
      lo = std::min(lo, idx_.position(insts[j]->id));
      hi = std::max(hi, idx_.position(insts[j]->id));
      members.push_back(insts[j]->id);
    }
    return !memory_effect_between(fn_, bi_, lo, hi, a0.base, false, members);
  }

  /// No member reaches another through operands inside the block.
  bool independent(const std::vector<ValueId>& col) {
    const std::set<ValueId> members(col.begin(), col.end());
    for (ValueId m : col) {
      std::set<ValueId> seen;
      std::vector<ValueId> work(idx_.inst(m)->operands.begin(), idx_.inst(m)->operands.end());
      while (!work.empty()) {
        ValueId v = work.back();
        work.pop_back();
        if (!seen.insert(v).second) continue;
        if (members.count(v)) return false;
        const Instruction* i = idx_.inst(v);
        if (!i || i->op == Opcode::Phi || idx_.block(v) != bi_) continue;
        work.insert(work.end(), i->operands.begin(), i->operands.end());
      }
    }
    return true;
  }

  /// The wide value appears at the last member; earlier members must not
  /// feed anything other than the parent pack before that point.
  bool schedulable(const std::vector<ValueId>& col, int parent) {
    int anchor = -1;
    for (ValueId m : col) anchor = std::max(anchor, idx_.position(m));
    const auto& parent_members = g_.nodes[parent].pack.members;
    for (ValueId m : col)
      for (ValueId u : fn_.users(m)) {
        const Instruction* ui = idx_.inst(u);
        if (!ui || ui->op == Opcode::Phi || idx_.block(u) != bi_ || idx_.position(u) > anchor) continue;
        if (std::find(parent_members.begin(), parent_members.end(), u) == parent_members.end()) return false;
      }
    return true;
  }

  const Function& fn_;
  const TargetDesc& target_;
  const IntrinsicMap& imap_;
  Index idx_;
  int bi_ = -1;
  RevecGraph g_;
  std::map<std::vector<ValueId>, int> by_members_;
  std::set<int> stack_;
};

} // namespace

RevecGraph build_graph(const Function& fn, const Pack& root, const TargetDesc& target, const IntrinsicMap& imap) {
  return Builder(fn, target, imap).run(root);
}

namespace detail {

std::vector<std::pair<ValueId, std::size_t>> out_of_graph_uses(const Function& fn, const RevecGraph& g, int node,
                                                               std::size_t j) {
  std::vector<std::pair<ValueId, std::size_t>> out;
  const PackNode& n = g.nodes[node];
  const ValueId member = n.pack.members[j];
  for (const auto& b : fn.blocks)
    for (const auto& u : b.insts)
      for (std::size_t k = 0; k < u.operands.size(); ++k) {
        if (u.operands[k] != member) continue;
        bool in_graph = false;
        for (int pi : n.parents) {
          const PackNode& p = g.nodes[pi];
          if (!p.rewritten() || p.pack.members[j] != u.id) continue;
          if (p.pack.kind == PackKind::PhiRoot) {
            for (std::size_t c = 0; c < p.child_labels.size(); ++c)
              in_graph = in_graph || (p.child_labels[c] == u.labels.at(k) && p.children[c] == node);
          } else {
            in_graph = in_graph || (k < p.children.size() && p.children[k] == node);
          }
        }
        if (!in_graph) out.emplace_back(u.id, k);
      }
  return out;
}

} // namespace detail

namespace {

std::string cost_class(const PackNode& n) {
  switch (n.pack.kind) {
  case PackKind::StoreRoot: return "store";
  case PackKind::PhiRoot: return "phi";
  case PackKind::IntrinsicCall: return "call";
  case PackKind::Shuffle: return "shuffle";
  case PackKind::Load: return "load";
  default: return "";
  }
}

} // namespace

CostReport estimate_profit(const Function& fn, const RevecGraph& graph, const TargetDesc& target) {
  CostReport r;
  const CostTable& costs = target.costs;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const PackNode& n = graph.nodes[i];
    const unsigned p = n.pack.p();
    const unsigned sw = n.pack.sw();
    if (n.mergeable()) {
      std::string cls = cost_class(n);
      if (n.pack.kind == PackKind::LiftedOp) cls = std::string(opcode_name(fn.find_inst(n.pack.members[0])->op));
      if (n.pack.kind == PackKind::Shuffle && n.pattern == ShufflePattern::A)
        r.benefit += static_cast<long>(p) * costs.cost(cls, sw);
      else
        r.benefit += static_cast<long>(p) * costs.cost(cls, sw) - costs.cost(cls, p * sw);
    }
    if (n.pack.kind == PackKind::GatherLeaf) r.gather_cost += static_cast<long>(p - 1) * costs.cost("gather", p * sw);
    if (n.rewritten() && n.pack.kind != PackKind::StoreRoot)
      for (std::size_t j = 0; j < p; ++j)
        r.extract_cost +=
            static_cast<long>(detail::out_of_graph_uses(fn, graph, static_cast<int>(i), j).size()) * costs.cost("extract", sw);
  }
  return r;
}

} // namespace revec
