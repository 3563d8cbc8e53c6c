#include "revec/verify.hpp"
#include "revec_internal.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace revec {

GatherTree build_gather_tree(Function& fn, const std::vector<ValueId>& values) {
  if (values.size() < 2 || (values.size() & (values.size() - 1)))
    throw IrError("gather needs a power-of-two number of values, got " + std::to_string(values.size()));
  auto t = fn.type_of(values[0]);
  if (!t || !t->is_vector()) throw IrError("gather of non-vector values");
  for (ValueId v : values)
    if (auto vt = fn.type_of(v); !vt || !(*vt == *t)) throw IrError("gather of mixed member types");

  GatherTree tree;
  std::vector<ValueId> level = values;
  unsigned lanes = t->lanes();
  while (level.size() > 1) {
    std::vector<ValueId> next;
    for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
      Instruction s;
      s.id = fn.fresh_id();
      s.op = Opcode::Shuffle;
      s.type = t->with_count(2 * lanes);
      s.operands = {level[k], level[k + 1]};
      for (unsigned i = 0; i < 2 * lanes; ++i) s.mask.push_back(static_cast<int>(i));
      next.push_back(s.id);
      tree.shuffles.push_back(std::move(s));
    }
    level = std::move(next);
    lanes *= 2;
  }
  tree.result = level[0];
  return tree;
}

namespace {

class Transformer {
public:
  Transformer(const Function& fn, const RevecGraph& g, const IntrinsicMap& imap)
      : orig_(fn), out_(fn), g_(g), imap_(imap), dom_(fn), wide_(g.nodes.size(), kNoValue), done_(g.nodes.size(), false) {}

  Function run() {
    emit(0);

    // Out-of-graph uses of widened members read an extract of the wide value.
    std::map<ValueId, ValueId> extract_of;
    for (std::size_t n = 0; n < g_.nodes.size(); ++n) {
      const PackNode& node = g_.nodes[n];
      if (!node.rewritten() || node.pack.kind == PackKind::StoreRoot) continue;
      for (std::size_t j = 0; j < node.pack.p(); ++j) {
        auto uses = detail::out_of_graph_uses(orig_, g_, static_cast<int>(n), j);
        if (uses.empty()) continue;
        Instruction x;
        x.id = out_.fresh_id();
        x.op = Opcode::ExtractSubvec;
        x.type = node.pack.narrow;
        x.operands = {wide_[n]};
        x.offset = static_cast<std::uint32_t>(j * node.pack.narrow.lanes());
        if (auto sink = sink_block(uses)) out_.insert_after_phis(*sink, x);
        else if (node.pack.kind == PackKind::PhiRoot) out_.insert_after_phis(g_.block, x);
        else out_.insert_before(anchor(node), x);
        created_.insert(x.id);
        extract_of[node.pack.members[j]] = x.id;
        for (const auto& [u, k] : uses) out_.find_inst(u)->operands[k] = x.id;
      }
    }

    std::set<ValueId> erased;
    for (const auto& node : g_.nodes)
      if (node.rewritten())
        for (ValueId m : node.pack.members) erased.insert(m);
    // New instructions may still name a member that is about to disappear
    // (pattern A sources, B/C operands, gather inputs).
    for (auto& b : out_.blocks)
      for (auto& i : b.insts)
        if (created_.count(i.id))
          for (auto& o : i.operands)
            if (erased.count(o)) {
              auto it = extract_of.find(o);
              if (it != extract_of.end() && it->second != i.id) o = it->second;
            }
    for (ValueId m : erased) out_.erase(m);
    erase_dead_in_place(out_);
    return std::move(out_);
  }

private:
  /// The one block other than the graph's own that holds every use, when the
  /// graph block dominates it and no use is a phi. Keeps loop-exit extracts
  /// out of the loop body.
  std::optional<std::string> sink_block(const std::vector<std::pair<ValueId, std::size_t>>& uses) const {
    std::optional<std::string> block;
    for (const auto& [u, k] : uses) {
      (void)k;
      auto loc = out_.locate(u);
      if (!loc) return std::nullopt;
      const auto& b = out_.blocks[loc->first];
      if (b.insts[loc->second].op == Opcode::Phi || b.label == g_.block) return std::nullopt;
      if (block && *block != b.label) return std::nullopt;
      block = b.label;
    }
    if (!block || !dom_.dominates(g_.block, *block)) return std::nullopt;
    return block;
  }

  /// Last member of `node` in the current function.
  ValueId anchor(const PackNode& node) const {
    ValueId best = node.pack.members[0];
    int best_pos = -1;
    for (ValueId m : node.pack.members)
      if (auto loc = out_.locate(m); loc && loc->second > best_pos) {
        best_pos = loc->second;
        best = m;
      }
    return best;
  }

  void place(const PackNode& node, Instruction inst) {
    created_.insert(inst.id);
    out_.insert_before(anchor(node), std::move(inst));
  }

  void place_entry(Instruction inst) {
    created_.insert(inst.id);
    auto& insts = out_.blocks.at(0).insts;
    insts.insert(insts.begin(), std::move(inst));
  }

  const Instruction& member(const PackNode& node, std::size_t j) const { return *orig_.find_inst(node.pack.members[j]); }

  Type wide_type(const PackNode& node) const {
    return node.pack.narrow.with_count(node.pack.p() * node.pack.narrow.lanes());
  }

  ValueId emit(int n) {
    if (done_[n]) return wide_[n];
    const PackNode& node = g_.nodes[n];
    const unsigned p = node.pack.p();
    Instruction w;
    w.op = Opcode::Add;

    switch (node.pack.kind) {
    case PackKind::Constant: {
      w.id = out_.fresh_id();
      w.op = Opcode::Const;
      w.type = wide_type(node);
      for (std::size_t j = 0; j < p; ++j) {
        const auto& c = member(node, j).constant;
        w.constant.insert(w.constant.end(), c.begin(), c.end());
      }
      return finish(n, w.id, [&] { place_entry(std::move(w)); });
    }
    case PackKind::GatherLeaf: {
      GatherTree tree = build_gather_tree(out_, node.pack.members);
      // Before the earliest consumer; phi consumers read it at the end of
      // the incoming block.
      const PackNode* phi_parent = nullptr;
      std::string incoming;
      ValueId before = kNoValue;
      int before_pos = 0;
      for (int pi : node.parents) {
        const PackNode& par = g_.nodes[pi];
        if (par.pack.kind == PackKind::PhiRoot) {
          for (std::size_t c = 0; c < par.children.size(); ++c)
            if (par.children[c] == n) incoming = par.child_labels[c];
          phi_parent = &par;
          continue;
        }
        ValueId a = anchor(par);
        int pos = out_.locate(a)->second;
        if (before == kNoValue || pos < before_pos) {
          before = a;
          before_pos = pos;
        }
      }
      for (auto& s : tree.shuffles) {
        created_.insert(s.id);
        if (phi_parent && before == kNoValue) out_.insert_at_end(incoming, std::move(s));
        else out_.insert_before(before, std::move(s));
      }
      return finish(n, tree.result, [] {});
    }
    case PackKind::PhiRoot: {
      w.id = out_.fresh_id();
      w.op = Opcode::Phi;
      w.type = wide_type(node);
      w.labels = node.child_labels;
      w.operands.assign(node.child_labels.size(), kNoValue);
      created_.insert(w.id);
      out_.insert_after_phis(g_.block, w);
      wide_[n] = w.id;
      done_[n] = true;
      for (std::size_t c = 0; c < node.children.size(); ++c) {
        ValueId v = emit(node.children[c]);
        out_.find_inst(w.id)->operands[c] = v;
      }
      return w.id;
    }
    case PackKind::StoreRoot: {
      ValueId v = emit(node.children.at(0));
      w.id = out_.fresh_id();
      w.op = Opcode::Store;
      w.type = Type::void_type();
      w.operands = {v, member(node, 0).operands.at(1)};
      return finish(n, kNoValue, [&] { place(node, std::move(w)); });
    }
    case PackKind::Load: {
      w.id = out_.fresh_id();
      w.op = Opcode::Load;
      w.type = wide_type(node);
      w.operands = {member(node, 0).operands.at(0)};
      return finish(n, w.id, [&] { place(node, std::move(w)); });
    }
    case PackKind::LiftedOp:
    case PackKind::IntrinsicCall:
    case PackKind::Bitcast: {
      const Instruction& f = member(node, 0);
      for (int c : node.children) w.operands.push_back(emit(c));
      w.id = out_.fresh_id();
      w.op = f.op;
      w.pred = f.pred;
      w.type = wide_type(node);
      if (f.op == Opcode::Call) {
        auto wide = imap_.lookup(f.callee, p);
        if (!wide) throw IrError("no wide conversion for @" + f.callee + " at factor " + std::to_string(p));
        w.callee = *wide;
      }
      return finish(n, w.id, [&] { place(node, std::move(w)); });
    }
    case PackKind::Shuffle: {
      const Instruction& f = member(node, 0);
      const ShufflePattern pat = node.pattern.value_or(ShufflePattern::Gather);
      if (pat == ShufflePattern::A) return finish(n, f.operands[0], [] {});
      w.op = Opcode::Shuffle;
      w.type = f.type.with_count(p * f.type.lanes());
      if (pat == ShufflePattern::D) {
        std::vector<std::vector<int>> masks;
        for (std::size_t j = 0; j < p; ++j) masks.push_back(member(node, j).mask);
        w.operands = {emit(node.children.at(0)), emit(node.children.at(1))};
        w.mask = widen_mask_pattern_d(masks, orig_.type_of(f.operands[0])->lanes());
      } else {
        for (std::size_t j = 0; j < p; ++j) w.mask.insert(w.mask.end(), member(node, j).mask.begin(), member(node, j).mask.end());
        w.operands = f.operands;
        if (pat == ShufflePattern::C) {
          const bool left = detail::pattern_c_constants_on_left(orig_, node.pack.members);
          auto merged = detail::merge_pattern_c_constants(orig_, node.pack.members, left);
          if (!merged) throw IrError("pattern C constants do not merge");
          Instruction c;
          c.id = out_.fresh_id();
          c.op = Opcode::Const;
          c.type = *orig_.type_of(f.operands[left ? 0 : 1]);
          c.constant = *merged;
          w.operands[left ? 0 : 1] = c.id;
          place_entry(std::move(c));
        } else if (pat != ShufflePattern::B) {
          throw IrError("gathered shuffle pack reached the widening path");
        }
      }
      w.id = out_.fresh_id();
      return finish(n, w.id, [&] { place(node, std::move(w)); });
    }
    }
    throw IrError("unhandled pack kind");
  }

  template <typename Place>
  ValueId finish(int n, ValueId value, Place&& place_fn) {
    place_fn();
    wide_[n] = value;
    done_[n] = true;
    return value;
  }

  const Function& orig_;
  Function out_;
  const RevecGraph& g_;
  const IntrinsicMap& imap_;
  DominatorTree dom_;
  std::vector<ValueId> wide_;
  std::vector<bool> done_;
  std::set<ValueId> created_;
};

} // namespace

Function transform_graph(const Function& fn, const RevecGraph& graph, const IntrinsicMap& imap) {
  return Transformer(fn, graph, imap).run();
}

RevecResult revectorize(const Function& fn, const TargetDesc& target, const IntrinsicMap& imap) {
  RevecResult res{fn, {}};
  std::vector<std::string> labels;
  for (const auto& b : fn.blocks) labels.push_back(b.label);
  for (const auto& label : labels) {
    if (!res.fn.find_block(label)) continue;
    for (const auto& root : find_root_packs(res.fn, label, target)) {
      bool consumed = std::any_of(root.members.begin(), root.members.end(),
                                  [&](ValueId m) { return res.fn.find_inst(m) == nullptr; });
      if (consumed) continue;
      RevecGraph g = build_graph(res.fn, root, target, imap);
      GraphReport rep;
      rep.block = label;
      rep.root_kind = root.kind;
      rep.p = root.p();
      rep.packs = g.pack_count();
      rep.packs_by_kind = g.packs_by_kind();
      for (const auto& n : g.nodes)
        if (n.pattern) ++rep.patterns[std::string(pattern_name(*n.pattern))];
      rep.cost = estimate_profit(res.fn, g, target);
      if (rep.cost.profitable()) {
        Function candidate = transform_graph(res.fn, g, imap);
        if (verify(candidate).empty()) {
          res.fn = std::move(candidate);
          rep.applied = true;
        } else {
          rep.note = "transformed function failed verification; kept the original";
        }
      }
      res.graphs.push_back(std::move(rep));
    }
  }
  return res;
}

} // namespace revec
