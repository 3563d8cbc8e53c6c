#include "revec/preprocess.hpp"

#include "revec/verify.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <tuple>

namespace revec {

namespace {

std::uint64_t trunc_bits(std::uint64_t v, unsigned bits) { return bits >= 64 ? v : v & ((1ULL << bits) - 1); }

std::int64_t sign_extend(std::uint64_t v, unsigned bits) {
  if (bits >= 64) return static_cast<std::int64_t>(v);
  const unsigned shift = 64 - bits;
  return static_cast<std::int64_t>(v << shift) >> shift;
}

bool icmp(ICmpPred p, unsigned w, std::uint64_t a, std::uint64_t b) {
  a = trunc_bits(a, w);
  b = trunc_bits(b, w);
  std::int64_t sa = sign_extend(a, w), sb = sign_extend(b, w);
  switch (p) {
  case ICmpPred::Eq: return a == b;
  case ICmpPred::Ne: return a != b;
  case ICmpPred::Slt: return sa < sb;
  case ICmpPred::Sle: return sa <= sb;
  case ICmpPred::Sgt: return sa > sb;
  case ICmpPred::Sge: return sa >= sb;
  case ICmpPred::Ult: return a < b;
  case ICmpPred::Ule: return a <= b;
  case ICmpPred::Ugt: return a > b;
  case ICmpPred::Uge: return a >= b;
  }
  return false;
}

/// Value of a scalar integer constant, sign-extended.
std::optional<std::int64_t> scalar_constant(const Function& fn, ValueId v) {
  const Instruction* i = fn.find_inst(v);
  if (!i || i->op != Opcode::Const || !i->type.is_scalar() || i->type.elem.is_float() || i->constant.size() != 1 ||
      !i->constant[0])
    return std::nullopt;
  return sign_extend(*i->constant[0], i->type.elem.bits());
}

int phi_entry(const Instruction& phi, const std::string& label) {
  for (std::size_t k = 0; k < phi.labels.size(); ++k)
    if (phi.labels[k] == label) return static_cast<int>(k);
  return -1;
}

ValueId resolve(const std::map<ValueId, ValueId>& m, ValueId v) {
  auto it = m.find(v);
  return it == m.end() ? v : it->second;
}

constexpr std::int64_t kTripSimulationLimit = 1 << 24;

std::optional<std::int64_t> simulate_trip_count(const Function& fn, const NaturalLoop& loop) {
  if (!loop.init || loop.exiting != loop.latch) return std::nullopt;
  const BasicBlock* latch = fn.find_block(loop.latch);
  const Instruction* term = latch ? latch->terminator() : nullptr;
  if (!term || term->op != Opcode::CondBr) return std::nullopt;
  const Instruction* cmp = fn.find_inst(term->operands.at(0));
  if (!cmp || cmp->op != Opcode::ICmp || cmp->operands.size() != 2) return std::nullopt;
  const bool continue_on_true = term->labels.at(0) == loop.header;
  const unsigned w = fn.type_of(loop.iv)->elem.bits();

  // Each compare operand is the iv, the incremented iv, or a constant.
  enum class Kind { Iv, IvNext, Const };
  std::vector<std::pair<Kind, std::int64_t>> ops;
  for (ValueId v : cmp->operands) {
    if (v == loop.iv) ops.emplace_back(Kind::Iv, 0);
    else if (v == loop.iv_next) ops.emplace_back(Kind::IvNext, 0);
    else if (auto c = scalar_constant(fn, v)) ops.emplace_back(Kind::Const, *c);
    else return std::nullopt;
  }
  std::uint64_t iv = static_cast<std::uint64_t>(*loop.init);
  for (std::int64_t t = 1; t <= kTripSimulationLimit; ++t) {
    std::uint64_t next = trunc_bits(iv + static_cast<std::uint64_t>(loop.step), w);
    auto val = [&](const std::pair<Kind, std::int64_t>& o) -> std::uint64_t {
      switch (o.first) {
      case Kind::Iv: return iv;
      case Kind::IvNext: return next;
      case Kind::Const: return static_cast<std::uint64_t>(o.second);
      }
      return 0;
    };
    bool c = icmp(cmp->pred, w, val(ops[0]), val(ops[1]));
    if (c != continue_on_true) return t;
    iv = next;
  }
  return std::nullopt;
}

} // namespace

bool NaturalLoop::contains(const std::string& label) const {
  return std::find(body.begin(), body.end(), label) != body.end();
}

std::vector<NaturalLoop> find_inner_loops(const Function& fn, std::vector<std::string>* rejected) {
  auto reject = [&](const std::string& header, const std::string& why) {
    if (rejected) rejected->push_back("loop at " + header + ": " + why);
  };
  std::vector<NaturalLoop> out;
  if (fn.blocks.empty()) return out;
  DominatorTree dt(fn);

  std::map<std::string, std::vector<std::string>> latches;
  std::vector<std::string> headers;
  for (const auto& b : fn.blocks) {
    if (!dt.reachable(b.label)) continue;
    for (const auto& s : b.successors())
      if (dt.dominates(s, b.label)) {
        if (!latches.count(s)) headers.push_back(s);
        auto& l = latches[s];
        if (std::find(l.begin(), l.end(), b.label) == l.end()) l.push_back(b.label);
      }
  }

  // Natural loop bodies: the header plus everything reaching a latch
  // without passing through the header.
  std::map<std::string, std::set<std::string>> bodies;
  for (const auto& h : headers) {
    std::set<std::string> body{h};
    std::vector<std::string> work;
    for (const auto& l : latches[h])
      if (body.insert(l).second) work.push_back(l);
    while (!work.empty()) {
      std::string x = work.back();
      work.pop_back();
      for (const auto& p : fn.predecessors(x))
        if (dt.reachable(p) && body.insert(p).second) work.push_back(p);
    }
    bodies[h] = std::move(body);
  }

  for (const auto& h : std::vector<std::string>(headers)) {
    const auto& body = bodies[h];
    bool inner = std::none_of(headers.begin(), headers.end(),
                              [&](const std::string& other) { return other != h && body.count(other); });
    if (!inner) continue;

    NaturalLoop loop;
    loop.header = h;
    for (const auto& b : fn.blocks)
      if (body.count(b.label) && b.label != h) loop.body.push_back(b.label);
    loop.body.insert(loop.body.begin(), h);

    if (latches[h].size() != 1) {
      reject(h, "more than one latch");
      continue;
    }
    loop.latch = latches[h][0];

    std::vector<std::pair<std::string, std::string>> exits;
    for (const auto& label : loop.body)
      for (const auto& s : fn.find_block(label)->successors())
        if (!body.count(s)) exits.emplace_back(label, s);
    if (exits.size() != 1) {
      reject(h, exits.empty() ? "no exit" : "more than one exit edge");
      continue;
    }
    loop.exiting = exits[0].first;
    loop.exit = exits[0].second;

    std::vector<std::string> outside_preds;
    for (const auto& p : fn.predecessors(h))
      if (!body.count(p)) outside_preds.push_back(p);
    if (outside_preds.size() != 1) {
      reject(h, "no unique preheader");
      continue;
    }
    loop.preheader = outside_preds[0];

    // Induction variable: header phi whose back-edge value is the phi plus a
    // chain of constant increments (one link per unrolled copy).
    const Instruction* term = fn.find_block(loop.exiting)->terminator();
    const Instruction* cond = term && term->op == Opcode::CondBr ? fn.find_inst(term->operands.at(0)) : nullptr;
    for (const auto& phi : fn.find_block(h)->insts) {
      if (phi.op != Opcode::Phi) break;
      if (!phi.type.is_scalar() || phi.type.elem.is_float()) continue;
      int latch_k = phi_entry(phi, loop.latch);
      int pre_k = phi_entry(phi, loop.preheader);
      if (latch_k < 0 || pre_k < 0) continue;
      const Instruction* upd = fn.find_inst(phi.operands[latch_k]);
      std::optional<std::int64_t> step = 0;
      for (const Instruction* link = upd; step;) {
        if (!link || (link->op != Opcode::Add && link->op != Opcode::Sub) ||
            !body.count(fn.blocks[fn.locate(link->id)->first].label)) {
          step.reset();
          break;
        }
        ValueId prev = link->operands[0];
        auto c = scalar_constant(fn, link->operands[1]);
        if (!c && link->op == Opcode::Add) {
          prev = link->operands[1];
          c = scalar_constant(fn, link->operands[0]);
        }
        if (!c) {
          step.reset();
          break;
        }
        *step += link->op == Opcode::Sub ? -*c : *c;
        if (prev == phi.id) break;
        link = fn.find_inst(prev);
      }
      if (!step || *step == 0) continue;
      bool used_by_cond =
          cond && std::any_of(cond->operands.begin(), cond->operands.end(),
                              [&](ValueId v) { return v == phi.id || v == upd->id; });
      if (loop.iv != kNoValue && !used_by_cond) continue;
      loop.iv = phi.id;
      loop.iv_next = upd->id;
      loop.step = *step;
      loop.init = scalar_constant(fn, phi.operands[pre_k]);
      if (used_by_cond) break;
    }
    if (loop.iv == kNoValue) {
      reject(h, "no affine induction variable");
      continue;
    }
    loop.trip_count = simulate_trip_count(fn, loop);
    out.push_back(std::move(loop));
  }
  return out;
}

namespace {

struct Linear {
  std::map<ValueId, std::int64_t> terms;
  std::int64_t c0 = 0;

  void add(const Linear& o, std::int64_t scale) {
    c0 += scale * o.c0;
    for (const auto& [s, c] : o.terms) {
      auto& t = terms[s];
      t += scale * c;
      if (t == 0) terms.erase(s);
    }
  }
};

Linear linear(const Function& fn, ValueId v, int depth) {
  Linear atom;
  atom.terms[v] = 1;
  if (depth > 32) return atom;
  if (auto c = scalar_constant(fn, v)) {
    Linear l;
    l.c0 = *c;
    return l;
  }
  const Instruction* i = fn.find_inst(v);
  if (!i || !i->type.is_scalar() || i->type.elem.is_float()) return atom;
  switch (i->op) {
  case Opcode::Add:
  case Opcode::Sub: {
    Linear l = linear(fn, i->operands[0], depth + 1);
    l.add(linear(fn, i->operands[1], depth + 1), i->op == Opcode::Add ? 1 : -1);
    return l;
  }
  case Opcode::Mul: {
    Linear a = linear(fn, i->operands[0], depth + 1);
    Linear b = linear(fn, i->operands[1], depth + 1);
    if (b.terms.empty()) std::swap(a, b);
    if (!a.terms.empty()) return atom;
    Linear l;
    l.add(b, a.c0);
    return l;
  }
  case Opcode::Shl: {
    auto amount = scalar_constant(fn, i->operands[1]);
    if (!amount || *amount < 0 || *amount > 30) return atom;
    Linear l;
    l.add(linear(fn, i->operands[0], depth + 1), std::int64_t{1} << *amount);
    return l;
  }
  default: return atom;
  }
}

} // namespace

AddressExpr analyze_address(const Function& fn, ValueId ptr) {
  AddressExpr e;
  for (int depth = 0; depth < 64; ++depth) {
    if (const Param* p = fn.find_param(ptr)) {
      if (!p->type.is_ptr()) return AddressExpr{};
      e.base = p->id;
      e.opaque = false;
      return e;
    }
    const Instruction* i = fn.find_inst(ptr);
    if (!i || i->op != Opcode::PtrAdd) return AddressExpr{};
    Linear l = linear(fn, i->operands[1], 0);
    e.c0 += l.c0;
    for (const auto& [s, c] : l.terms) {
      auto& t = e.terms[s];
      t += c;
      if (t == 0) e.terms.erase(s);
    }
    ptr = i->operands[0];
  }
  return AddressExpr{};
}

std::vector<StoreChain> analyze_store_chains(const Function& fn, const NaturalLoop& loop) {
  struct Entry {
    ValueId store;
    std::int64_t offset;
    std::int64_t elems; // in units of the base pointer's element type
    unsigned bits;
    ScalarType elem;
    std::size_t position;
  };
  using Key = std::tuple<std::string, ValueId, std::map<ValueId, std::int64_t>, unsigned, ScalarKind>;
  std::map<Key, std::vector<Entry>> groups;
  std::size_t position = 0;
  for (const auto& label : loop.body) {
    for (const auto& inst : fn.find_block(label)->insts) {
      ++position;
      if (inst.op != Opcode::Store) continue;
      auto vt = fn.type_of(inst.operands[0]);
      if (!vt || !vt->is_vector()) continue;
      AddressExpr a = analyze_address(fn, inst.operands[1]);
      if (a.opaque) continue;
      const Param* base = fn.find_param(a.base);
      const unsigned pb = base->type.elem.bytes();
      if (vt->total_bytes() % pb != 0) continue;
      Key key{label, a.base, a.terms, vt->total_bits(), vt->elem.kind};
      groups[key].push_back({inst.id, a.c0, static_cast<std::int64_t>(vt->total_bytes() / pb), vt->total_bits(),
                             vt->elem, position});
    }
  }

  std::vector<std::pair<std::size_t, StoreChain>> chains;
  for (auto& [key, entries] : groups) {
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.offset < b.offset; });
    const auto& terms = std::get<2>(key);
    auto it = terms.find(loop.iv);
    const std::int64_t c1 = it == terms.end() ? 0 : it->second;
    auto flush = [&](std::size_t from, std::size_t to) {
      StoreChain ch;
      ch.base = std::get<1>(key);
      ch.elem = entries[from].elem;
      ch.sw = entries[from].bits;
      std::size_t first_pos = entries[from].position;
      for (std::size_t k = from; k < to; ++k) {
        ch.stores.push_back(entries[k].store);
        first_pos = std::min(first_pos, entries[k].position);
      }
      ch.scw = ch.sw * static_cast<unsigned>(ch.stores.size());
      const std::int64_t per_iteration = entries[from].elems * static_cast<std::int64_t>(ch.stores.size());
      ch.consecutive_across_iterations = c1 * loop.step == per_iteration;
      chains.emplace_back(first_pos, std::move(ch));
    };
    std::size_t start = 0;
    for (std::size_t k = 1; k <= entries.size(); ++k)
      if (k == entries.size() || entries[k].offset != entries[k - 1].offset + entries[k - 1].elems) {
        flush(start, k);
        start = k;
      }
  }
  std::stable_sort(chains.begin(), chains.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<StoreChain> out;
  for (auto& [pos, ch] : chains) out.push_back(std::move(ch));
  return out;
}

std::optional<std::uint64_t> reduction_identity(Opcode op, ScalarType t) {
  const unsigned w = t.bits();
  const std::uint64_t ones = trunc_bits(~0ULL, w);
  if (t.is_float()) return op == Opcode::Add ? std::optional<std::uint64_t>(0) : std::nullopt; // +0.0
  switch (op) {
  case Opcode::Add:
  case Opcode::Or:
  case Opcode::Xor:
  case Opcode::UMax: return 0;
  case Opcode::And:
  case Opcode::UMin: return ones;
  case Opcode::SMax: return std::uint64_t{1} << (w - 1);
  case Opcode::SMin: return ones >> 1;
  default: return std::nullopt;
  }
}

std::optional<ReductionChain> detect_reduction(const Function& fn, const NaturalLoop& loop, ValueId phi_id,
                                               std::size_t expected_updates) {
  if (phi_id == loop.iv) return std::nullopt;
  const Instruction* phi = fn.find_inst(phi_id);
  if (!phi || phi->op != Opcode::Phi || phi->labels.size() != 2) return std::nullopt;
  int latch_k = phi_entry(*phi, loop.latch);
  if (latch_k < 0 || phi_entry(*phi, loop.preheader) < 0) return std::nullopt;
  const ValueId tail = phi->operands[latch_k];

  auto in_loop = [&](ValueId v) {
    auto loc = fn.locate(v);
    return loc && loop.contains(fn.blocks[loc->first].label);
  };

  ReductionChain rc;
  rc.phi = phi_id;
  ValueId cur = phi_id;
  while (cur != tail) {
    if (rc.updates.size() > 64 || fn.use_count(cur) != 1) return std::nullopt;
    const Instruction* u = fn.find_inst(fn.users(cur).at(0));
    if (!u || !is_binary_op(u->op) || !(u->type == phi->type) || !in_loop(u->id)) return std::nullopt;
    if (rc.updates.empty()) rc.op = u->op;
    else if (u->op != rc.op) return std::nullopt;
    rc.updates.push_back(u->id);
    cur = u->id;
  }
  if (rc.updates.empty()) return std::nullopt;
  if (phi->type.elem.is_float() && !fn.reassoc) return std::nullopt;
  if (!phi->type.elem.is_float() && !is_associative(rc.op)) return std::nullopt;
  if (rc.op == Opcode::Mul) return std::nullopt;
  auto id = reduction_identity(rc.op, phi->type.elem);
  if (!id) return std::nullopt;
  rc.identity = *id;

  // The accumulated value may only feed the back edge inside the loop.
  for (ValueId user : fn.users(tail))
    if (user != phi_id && in_loop(user)) return std::nullopt;
  if (expected_updates && rc.updates.size() != expected_updates) return std::nullopt;
  return rc;
}

unsigned compute_unroll_factor(const Function& fn, const NaturalLoop& loop, const TargetDesc& target) {
  const unsigned vw = target.max_vector_bits;
  unsigned uf = 1;
  auto consider = [&](unsigned w) {
    if (w == 0 || w >= vw) return;
    uf = std::max(std::lcm(vw, w) / w, uf);
  };
  auto chains = analyze_store_chains(fn, loop);
  std::stable_sort(chains.begin(), chains.end(),
                   [](const StoreChain& a, const StoreChain& b) { return a.stores.size() < b.stores.size(); });
  for (const auto& ch : chains)
    if (ch.consecutive_across_iterations) consider(ch.scw);
  for (const auto& inst : fn.find_block(loop.header)->insts) {
    if (inst.op != Opcode::Phi) break;
    if (inst.type.is_vector() && detect_reduction(fn, loop, inst.id)) consider(inst.type.total_bits());
  }
  return std::min(uf, kMaxUnrollFactor);
}

UnrollResult unroll_loop(const Function& fn, const NaturalLoop& loop, unsigned uf) {
  UnrollResult r{fn, false, {}, {}, 0, 0};
  if (uf < 2) {
    r.diagnostic = "unroll factor " + std::to_string(uf) + " is below 2";
    return r;
  }
  if (!loop.single_block()) {
    r.diagnostic = "only single-block loops are unrolled";
    return r;
  }
  if (!loop.trip_count) {
    r.diagnostic = "trip count is not a compile-time constant";
    return r;
  }
  const std::int64_t trips = *loop.trip_count;
  const std::int64_t main = trips / uf;
  const std::int64_t rem = trips % uf;
  if (main == 0) {
    r.diagnostic = "trip count " + std::to_string(trips) + " is smaller than the unroll factor";
    return r;
  }

  Function& out = r.fn;
  const BasicBlock& orig = *fn.find_block(loop.header);
  std::vector<Instruction> phis, body;
  const Instruction* term = orig.terminator();
  for (const auto& i : orig.insts) {
    if (i.op == Opcode::Phi) phis.push_back(i);
    else if (&i != term) body.push_back(i);
  }
  auto latch_value = [&](const Instruction& phi) { return phi.operands.at(phi_entry(phi, loop.latch)); };

  std::vector<Instruction> insts = phis;
  insts.insert(insts.end(), body.begin(), body.end());
  std::map<ValueId, ValueId> last; // copy 0 is the identity
  for (unsigned k = 1; k < uf; ++k) {
    std::map<ValueId, ValueId> m;
    for (const auto& phi : phis) m[phi.id] = resolve(last, latch_value(phi));
    for (const auto& i : body) {
      Instruction c = i;
      c.id = out.fresh_id();
      for (auto& o : c.operands) o = resolve(m, o);
      m[i.id] = c.id;
      insts.push_back(std::move(c));
    }
    last = std::move(m);
  }
  for (std::size_t k = 0; k < phis.size(); ++k) {
    int e = phi_entry(insts[k], loop.latch);
    insts[k].operands[e] = resolve(last, latch_value(phis[k]));
  }

  const Type iv_type = *fn.type_of(loop.iv);
  const unsigned w = iv_type.elem.bits();
  Instruction bound;
  bound.id = out.fresh_id();
  bound.op = Opcode::Const;
  bound.type = iv_type;
  bound.constant = {trunc_bits(static_cast<std::uint64_t>(*loop.init + main * static_cast<std::int64_t>(uf) * loop.step), w)};
  Instruction cmp;
  cmp.id = out.fresh_id();
  cmp.op = Opcode::ICmp;
  cmp.pred = ICmpPred::Ne;
  cmp.type = Type::scalar(ScalarKind::I1);
  cmp.operands = {resolve(last, loop.iv_next), bound.id};
  const std::string rem_label = rem > 0 ? out.fresh_label(loop.header + ".rem") : std::string();
  Instruction br;
  br.id = out.fresh_id();
  br.op = Opcode::CondBr;
  br.operands = {cmp.id};
  br.labels = {loop.header, rem > 0 ? rem_label : loop.exit};
  insts.push_back(bound);
  insts.push_back(cmp);
  insts.push_back(br);

  // Remainder: a copy of the original loop continuing from the main loop's
  // final state.
  std::map<ValueId, ValueId> final_map = last;
  BasicBlock rb;
  if (rem > 0) {
    rb.label = rem_label;
    std::map<ValueId, ValueId> m;
    for (const auto& phi : phis) m[phi.id] = out.fresh_id();
    for (const auto& phi : phis) {
      Instruction c = phi;
      c.id = m[phi.id];
      c.labels = {loop.header, rem_label};
      c.operands = {resolve(last, latch_value(phi)), kNoValue};
      rb.insts.push_back(std::move(c));
    }
    for (const auto& i : body) {
      Instruction c = i;
      c.id = out.fresh_id();
      for (auto& o : c.operands) o = resolve(m, o);
      m[i.id] = c.id;
      rb.insts.push_back(std::move(c));
    }
    for (std::size_t k = 0; k < phis.size(); ++k) rb.insts[k].operands[1] = resolve(m, latch_value(phis[k]));
    Instruction t = *term;
    t.id = out.fresh_id();
    for (auto& o : t.operands) o = resolve(m, o);
    for (auto& l : t.labels)
      if (l == loop.header) l = rem_label;
    rb.insts.push_back(std::move(t));
    final_map = std::move(m);
  }

  std::set<ValueId> loop_values;
  for (const auto& i : orig.insts) loop_values.insert(i.id);
  const std::string exit_pred = rem > 0 ? rem_label : loop.header;
  for (auto& b : out.blocks) {
    if (b.label == loop.header) continue;
    for (auto& i : b.insts) {
      for (std::size_t k = 0; k < i.operands.size(); ++k)
        if (loop_values.count(i.operands[k])) i.operands[k] = resolve(final_map, i.operands[k]);
      if (i.op == Opcode::Phi && b.label == loop.exit)
        for (auto& l : i.labels)
          if (l == loop.header) l = exit_pred;
    }
  }
  int hi = out.block_index(loop.header);
  out.blocks[hi].insts = std::move(insts);
  if (rem > 0) out.blocks.insert(out.blocks.begin() + hi + 1, std::move(rb));
  erase_dead_in_place(out);

  r.applied = true;
  r.remainder_header = rem_label;
  r.main_trips = main;
  r.remainder_trips = rem;
  return r;
}

SplitResult split_reductions(const Function& fn, const NaturalLoop& loop, unsigned uf) {
  SplitResult r{fn, 0, {}};
  if (uf < 2) return r;
  Function& out = r.fn;

  std::vector<ValueId> phis;
  for (const auto& inst : fn.find_block(loop.header)->insts) {
    if (inst.op != Opcode::Phi) break;
    if (inst.id != loop.iv) phis.push_back(inst.id);
  }

  std::string fold_label;
  for (ValueId phi_id : phis) {
    auto rc = detect_reduction(out, loop, phi_id, uf);
    if (!rc) {
      if (auto any = detect_reduction(out, loop, phi_id))
        r.diagnostics.push_back("reduction with " + std::to_string(any->updates.size()) + " updates does not match " +
                                "unroll factor " + std::to_string(uf));
      continue;
    }
    const Instruction phi = *out.find_inst(phi_id);
    const Type t = phi.type;

    // Epilogue block on the exit edge, shared by every reduction in the loop.
    if (fold_label.empty()) {
      fold_label = out.fresh_label(loop.header + ".fold");
      BasicBlock fb;
      fb.label = fold_label;
      Instruction br;
      br.id = out.fresh_id();
      br.op = Opcode::Br;
      br.labels = {loop.exit};
      fb.insts.push_back(std::move(br));
      for (auto& l : out.find_block(loop.exiting)->insts.back().labels)
        if (l == loop.exit) l = fold_label;
      for (auto& i : out.find_block(loop.exit)->insts)
        if (i.op == Opcode::Phi)
          for (auto& l : i.labels)
            if (l == loop.exiting) l = fold_label;
      out.blocks.insert(out.blocks.begin() + out.block_index(loop.exiting) + 1, std::move(fb));
    }

    const ValueId tail = rc->updates.back();
    std::vector<ValueId> accs{rc->updates[0]};
    for (unsigned k = 1; k < uf; ++k) {
      Instruction c;
      c.id = out.fresh_id();
      c.op = Opcode::Const;
      c.type = t;
      c.constant.assign(t.lanes(), rc->identity);
      out.insert_at_end(loop.preheader, c);

      Instruction p;
      p.id = out.fresh_id();
      p.op = Opcode::Phi;
      p.type = t;
      p.labels = phi.labels;
      p.operands.resize(2);
      p.operands[phi_entry(phi, loop.preheader)] = c.id;
      p.operands[phi_entry(phi, loop.latch)] = rc->updates[k];
      out.insert_after_phis(loop.header, p);

      Instruction* u = out.find_inst(rc->updates[k]);
      for (auto& o : u->operands)
        if (o == rc->updates[k - 1]) {
          o = p.id;
          break;
        }
      accs.push_back(rc->updates[k]);
    }
    Instruction* r1 = out.find_inst(phi_id);
    r1->operands[phi_entry(*r1, loop.latch)] = rc->updates[0];

    // Pairwise fold tree.
    std::set<ValueId> fold_insts;
    while (accs.size() > 1) {
      std::vector<ValueId> next;
      for (std::size_t k = 0; k + 1 < accs.size(); k += 2) {
        Instruction f;
        f.id = out.fresh_id();
        f.op = rc->op;
        f.type = t;
        f.operands = {accs[k], accs[k + 1]};
        out.insert_at_end(fold_label, f);
        fold_insts.insert(f.id);
        next.push_back(f.id);
      }
      if (accs.size() % 2) next.push_back(accs.back());
      accs = std::move(next);
    }
    const ValueId folded = accs[0];
    for (auto& b : out.blocks) {
      if (loop.contains(b.label)) continue;
      for (auto& i : b.insts) {
        if (fold_insts.count(i.id)) continue;
        for (auto& o : i.operands)
          if (o == tail) o = folded;
      }
    }
    ++r.split;
  }
  return r;
}

PreprocessResult preprocess(const Function& fn, const TargetDesc& target) {
  PreprocessResult res{fn, {}, {}};
  std::set<std::string> done;
  bool first = true;
  for (;;) {
    auto loops = find_inner_loops(res.fn, first ? &res.rejected : nullptr);
    first = false;
    auto it = std::find_if(loops.begin(), loops.end(), [&](const NaturalLoop& l) { return !done.count(l.header); });
    if (it == loops.end()) break;
    NaturalLoop loop = *it;
    done.insert(loop.header);

    LoopReport rep;
    rep.header = loop.header;
    rep.unroll_factor = compute_unroll_factor(res.fn, loop, target);
    if (rep.unroll_factor < 2) {
      rep.notes.push_back("unroll factor 1");
      res.loops.push_back(std::move(rep));
      continue;
    }
    UnrollResult ur = unroll_loop(res.fn, loop, rep.unroll_factor);
    if (!ur.applied) {
      rep.notes.push_back(ur.diagnostic);
      res.loops.push_back(std::move(rep));
      continue;
    }
    if (!ur.remainder_header.empty()) done.insert(ur.remainder_header);
    res.fn = std::move(ur.fn);
    rep.unrolled = true;
    rep.main_trips = ur.main_trips;
    rep.remainder_trips = ur.remainder_trips;

    for (const auto& l : find_inner_loops(res.fn))
      if (l.header == loop.header) {
        SplitResult sr = split_reductions(res.fn, l, rep.unroll_factor);
        res.fn = std::move(sr.fn);
        rep.reductions_split = sr.split;
        rep.notes.insert(rep.notes.end(), sr.diagnostics.begin(), sr.diagnostics.end());
        break;
      }
    res.loops.push_back(std::move(rep));
  }
  return res;
}

} // namespace revec
