#include "revec/interp.hpp"
#include "revec/pipeline.hpp"
#include "revec/revec.hpp"
#include "revec/verify.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace revec;
using testsupport::parse_one;

namespace {

IntrinsicMap default_imap(const TargetDesc& t) {
  return IntrinsicMap::parse(testsupport::read_text(testsupport::source_dir() / "data" / "imap.txt")).filtered(t);
}

std::vector<ValueId> ids_of(const Function& fn, Opcode op) {
  std::vector<ValueId> out;
  for (const auto& b : fn.blocks)
    for (const auto& i : b.insts)
      if (i.op == op) out.push_back(i.id);
  return out;
}

// Graphs for every root of `block` after preprocessing for `target`.
struct Built {
  Function fn;
  std::vector<RevecGraph> graphs;
};

Built build_all(const Function& src, const std::string& block, const char* target) {
  TargetDesc t = TargetDesc::named(target);
  Built b{preprocess(src, t).fn, {}};
  for (const auto& root : find_root_packs(b.fn, block, t)) b.graphs.push_back(build_graph(b.fn, root, t, default_imap(t)));
  return b;
}

std::string stores_fn(unsigned count, unsigned lanes, const char* ty) {
  std::string s = "func @f(%in: ptr<" + std::string(ty) + ">, %out: ptr<" + ty + ">) {\nentry:\n";
  for (unsigned k = 0; k < count; ++k) {
    std::string o = std::to_string(k * lanes);
    s += "  %o" + std::to_string(k) + " = const i64 " + o + "\n";
    s += "  %q" + std::to_string(k) + " = ptradd %in, %o" + std::to_string(k) + "\n";
    s += "  %v" + std::to_string(k) + " = load <" + std::to_string(lanes) + " x " + ty + "> %q" + std::to_string(k) + "\n";
    s += "  %p" + std::to_string(k) + " = ptradd %out, %o" + std::to_string(k) + "\n";
    s += "  store %v" + std::to_string(k) + ", %p" + std::to_string(k) + "\n";
  }
  return s + "  ret\n}\n";
}

// Reference semantics of a shuffle over concat(a, b); undef lanes stay undef.
std::vector<std::optional<std::uint64_t>> apply_shuffle(const std::vector<std::uint64_t>& a,
                                                        const std::vector<std::uint64_t>& b,
                                                        const std::vector<int>& mask) {
  std::vector<std::optional<std::uint64_t>> out;
  for (int m : mask) {
    if (m == kUndefLane) out.emplace_back();
    else if (static_cast<std::size_t>(m) < a.size()) out.emplace_back(a[m]);
    else out.emplace_back(b[m - a.size()]);
  }
  return out;
}

} // namespace

TEST(RootPacks, TwoAdjacentStoresAt256) {
  Function fn = parse_one(stores_fn(2, 8, "i16"));
  auto roots = find_root_packs(fn, "entry", TargetDesc::named("gen256"));
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_EQ(roots[0].kind, PackKind::StoreRoot);
  EXPECT_EQ(roots[0].p(), 2u);
}

TEST(RootPacks, FourAdjacentStoresAt512) {
  Function fn = parse_one(stores_fn(4, 4, "i32"));
  auto roots = find_root_packs(fn, "entry", TargetDesc::named("gen512"));
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_EQ(roots[0].p(), 4u);
}

TEST(RootPacks, ThreeStoresChunkToPowerOfTwo) {
  Function fn = parse_one(stores_fn(3, 4, "i32"));
  auto roots = find_root_packs(fn, "entry", TargetDesc::named("gen512"));
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_EQ(roots[0].p(), 2u);
  auto out = revectorize(fn, TargetDesc::named("gen512"), default_imap(TargetDesc::named("gen512")));
  EXPECT_EQ(check_equivalence(fn, out.fn, 20, 1).verdict, Verdict::Pass);
}

TEST(RootPacks, NothingAtEqualWidth) {
  Function fn = parse_one(stores_fn(2, 4, "i32"));
  EXPECT_TRUE(find_root_packs(fn, "entry", TargetDesc::named("gen128")).empty());
}

// The second store's value is read back from the first store's address, so
// sinking the first store to the second would change what the load sees.
TEST(RootPacks, SameBaseLoadBetweenBlocksTheChain) {
  Function fn = parse_one(R"(
func @f(%in: ptr<i32>, %out: ptr<i32>) {
entry:
  %a = load <4 x i32> %in
  store %a, %out
  %r = load <4 x i32> %out
  %b = add <4 x i32> %r, %r
  %four = const i64 4
  %q = ptradd %out, %four
  store %b, %q
  ret
})");
  for (const auto& r : find_root_packs(fn, "entry", TargetDesc::named("gen256")))
    EXPECT_NE(r.kind, PackKind::StoreRoot);
}

TEST(RootPacks, OtherBaseStoreDoesNotBlock) {
  Function fn = parse_one(R"(
func @f(%in: ptr<i32>, %out: ptr<i32>) {
entry:
  %a = load <4 x i32> %in
  store %a, %out
  store %a, %in
  %four = const i64 4
  %q = ptradd %out, %four
  %b = load <4 x i32> %in
  store %b, %q
  ret
})");
  auto roots = find_root_packs(fn, "entry", TargetDesc::named("gen256"));
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_EQ(roots[0].p(), 2u);
  TargetDesc t = TargetDesc::named("gen256");
  auto out = revectorize(fn, t, default_imap(t));
  EXPECT_EQ(check_equivalence(fn, out.fn, 50, 1).verdict, Verdict::Pass);
}

TEST(Graph, WidenPackHasFivePacks) {
  Built b = build_all(testsupport::load_corpus("widen_pack.vir").functions[0], "loop", "gen256");
  ASSERT_EQ(b.graphs.size(), 1u);
  const RevecGraph& g = b.graphs[0];
  EXPECT_EQ(g.pack_count(), 5u);
  auto kinds = g.packs_by_kind();
  EXPECT_EQ(kinds["store-root"], 1);
  EXPECT_EQ(kinds["intrinsic-call"], 1);
  EXPECT_EQ(kinds["lifted-op"], 1);
  EXPECT_EQ(kinds["shuffle"], 1);
  EXPECT_EQ(kinds["load"], 1);
  CostReport c = estimate_profit(b.fn, g, TargetDesc::named("gen256"));
  EXPECT_EQ(c.benefit, 5);
  EXPECT_EQ(c.gather_cost, 0);
  EXPECT_EQ(c.extract_cost, 0);
  EXPECT_TRUE(c.profitable());
}

TEST(Graph, OperandsFromAnotherBlockAreGathered) {
  Function fn = testsupport::load_corpus("cost_gate.vir").functions[0];
  TargetDesc t = TargetDesc::named("gen256");
  auto roots = find_root_packs(fn, "body", t);
  ASSERT_EQ(roots.size(), 1u);
  RevecGraph g = build_graph(fn, roots[0], t, default_imap(t));
  EXPECT_EQ(g.packs_by_kind()["gather-leaf"], 1);
  CostReport c = estimate_profit(fn, g, t);
  EXPECT_EQ(c.benefit, 1);
  EXPECT_EQ(c.gather_cost, 1);
  EXPECT_FALSE(c.profitable());
}

TEST(Graph, FourPhaddCallsAt512AreGathered) {
  Built b = build_all(testsupport::load_corpus("phadd_basic.vir").functions[0], "loop", "gen512");
  ASSERT_EQ(b.graphs.size(), 1u);
  auto kinds = b.graphs[0].packs_by_kind();
  EXPECT_EQ(kinds["intrinsic-call"], 0);
  EXPECT_EQ(kinds["gather-leaf"], 1);
}

TEST(Graph, ReductionPhiRootHasBackEdge) {
  Built b = build_all(testsupport::load_corpus("sum_reduce.vir").functions[0], "loop", "gen256");
  ASSERT_EQ(b.graphs.size(), 1u);
  EXPECT_EQ(b.graphs[0].nodes[0].pack.kind, PackKind::PhiRoot);
  EXPECT_FALSE(b.graphs[0].back_edges.empty());
}

TEST(Graph, DependentMembersAreNotPacked) {
  Function fn = parse_one(R"(
func @f(%in: ptr<i32>, %out: ptr<i32>) {
entry:
  %a = load <4 x i32> %in
  %b = add <4 x i32> %a, %a
  %c = add <4 x i32> %b, %b
  store %b, %out
  %four = const i64 4
  %q = ptradd %out, %four
  store %c, %q
  ret
})");
  TargetDesc t = TargetDesc::named("gen256");
  auto roots = find_root_packs(fn, "entry", t);
  ASSERT_EQ(roots.size(), 1u);
  RevecGraph g = build_graph(fn, roots[0], t, default_imap(t));
  EXPECT_EQ(g.packs_by_kind()["lifted-op"], 0);
}

TEST(Classify, Examples) {
  Function fn = parse_one(R"(
func @f(%x: ptr<i32>, %y: ptr<i32>, %z: ptr<i32>, %w: ptr<i32>) {
entry:
  %a = load <8 x i32> %x
  %b = load <8 x i32> %y
  %lo = shuffle %a, %a, [0, 1, 2, 3]
  %hi = shuffle %a, %a, [4, 5, 6, 7]
  %b1 = shuffle %a, %b, [0, 8, 1, 9]
  %b2 = shuffle %a, %b, [2, 10, 3, 11]
  %c = load <4 x i32> %z
  %d = load <4 x i32> %w
  %e = load <4 x i32> %x
  %f = load <4 x i32> %y
  %d1 = shuffle %c, %d, [0, 4, 1, 5]
  %d2 = shuffle %e, %f, [0, 4, 1, 5]
  %k1 = const <4 x i32> [100, 101, u, u]
  %k2 = const <4 x i32> [u, u, 102, 103]
  %c1 = shuffle %c, %k1, [0, 4, 1, 5]
  %c2 = shuffle %c, %k2, [2, 6, 3, 7]
  %g1 = shuffle %c, %d, [0, 4, 1, 5]
  %g2 = shuffle %e, %f, [3, 2, 1, 0]
  store %lo, %x
  store %hi, %x
  store %b1, %x
  store %b2, %x
  store %d1, %x
  store %d2, %x
  store %c1, %x
  store %c2, %x
  store %g1, %x
  store %g2, %x
  ret
})");
  auto sh = ids_of(fn, Opcode::Shuffle);
  ASSERT_EQ(sh.size(), 10u);
  EXPECT_EQ(classify_shuffle_pack(fn, {sh[0], sh[1]}), ShufflePattern::A);
  EXPECT_EQ(classify_shuffle_pack(fn, {sh[2], sh[3]}), ShufflePattern::B);
  EXPECT_EQ(classify_shuffle_pack(fn, {sh[4], sh[5]}), ShufflePattern::D);
  EXPECT_EQ(classify_shuffle_pack(fn, {sh[6], sh[7]}), ShufflePattern::C);
  EXPECT_EQ(classify_shuffle_pack(fn, {sh[8], sh[9]}), ShufflePattern::Gather);
  // Slices out of order are not pattern A.
  EXPECT_NE(classify_shuffle_pack(fn, {sh[1], sh[0]}), ShufflePattern::A);
}

TEST(PatternD, FrozenExample) {
  EXPECT_EQ(widen_mask_pattern_d({{0, 4, 1, 5}, {0, 4, 1, 5}}, 4), (std::vector<int>{0, 8, 1, 9, 4, 12, 5, 13}));
  EXPECT_EQ(remap_pattern_d({0, 4, 1, 5}, 4, 2, 2), (std::vector<int>{4, 12, 5, 13}));
  EXPECT_EQ(remap_pattern_d({0, kUndefLane}, 4, 2, 1), (std::vector<int>{0, kUndefLane}));
}

// Wide shuffle over concatenated operands equals the concatenated narrow
// shuffle results, lane for lane.
TEST(PatternD, RandomizedEquivalence) {
  std::mt19937_64 rng(2018);
  for (int trial = 0; trial < 1000; ++trial) {
    const unsigned p = 1u << (1 + rng() % 3);
    const unsigned n = 1u << (1 + rng() % 4);
    const unsigned len = 1u << (rng() % 5);
    std::vector<std::vector<std::uint64_t>> a(p), b(p);
    std::vector<std::vector<int>> masks(p);
    std::vector<std::uint64_t> wa, wb;
    for (unsigned i = 0; i < p; ++i) {
      for (unsigned k = 0; k < n; ++k) {
        a[i].push_back(rng());
        b[i].push_back(rng());
      }
      for (unsigned k = 0; k < len; ++k)
        masks[i].push_back(rng() % 10 == 0 ? kUndefLane : static_cast<int>(rng() % (2 * n)));
      wa.insert(wa.end(), a[i].begin(), a[i].end());
      wb.insert(wb.end(), b[i].begin(), b[i].end());
    }
    std::vector<std::optional<std::uint64_t>> expect;
    for (unsigned i = 0; i < p; ++i) {
      auto part = apply_shuffle(a[i], b[i], masks[i]);
      expect.insert(expect.end(), part.begin(), part.end());
    }
    auto got = apply_shuffle(wa, wb, widen_mask_pattern_d(masks, n));
    ASSERT_EQ(got, expect) << "trial " << trial << " p=" << p << " n=" << n;
  }
}

TEST(GatherTree, FourValuesThreeShuffles) {
  Function fn = parse_one(R"(
func @g(%in: ptr<i32>, %out: ptr<i32>) {
entry:
  %o1 = const i64 4
  %o2 = const i64 8
  %o3 = const i64 12
  %p1 = ptradd %in, %o1
  %p2 = ptradd %in, %o2
  %p3 = ptradd %in, %o3
  %v0 = load <4 x i32> %in
  %v1 = load <4 x i32> %p1
  %v2 = load <4 x i32> %p2
  %v3 = load <4 x i32> %p3
  ret
})");
  auto loads = ids_of(fn, Opcode::Load);
  GatherTree tree = build_gather_tree(fn, loads);
  ASSERT_EQ(tree.shuffles.size(), 3u);
  for (const auto& s : tree.shuffles) {
    for (std::size_t k = 0; k < s.mask.size(); ++k) EXPECT_EQ(s.mask[k], static_cast<int>(k));
  }
  const ValueId ret = fn.blocks[0].insts.back().id;
  for (auto s : tree.shuffles) fn.insert_before(ret, s);
  Instruction st;
  st.id = fn.fresh_id();
  st.op = Opcode::Store;
  st.type = Type::void_type();
  st.operands = {tree.result, fn.params[1].id};
  fn.insert_before(ret, st);
  ASSERT_TRUE(verify(fn).empty());
  EXPECT_EQ(*fn.type_of(tree.result), Type::vector(ScalarKind::I32, 16));

  MemoryImage mem;
  Buffer in(ScalarType{ScalarKind::I32}, 16);
  for (std::size_t i = 0; i < 16; ++i) in.set(i, 1000 + i * 7);
  mem.buffers["in"] = in;
  mem.buffers["out"] = Buffer(ScalarType{ScalarKind::I32}, 16);
  auto r = eval_function(fn, {}, mem);
  const unsigned m = 4;
  for (unsigned j = 1; j <= 4; ++j)
    for (unsigned t = 0; t < m; ++t)
      EXPECT_EQ(r.memory.buffers.at("out").get((j - 1) * m + t), in.get((j - 1) * 4 + t)) << j << "," << t;
}

TEST(GatherTree, TwoValuesOneShuffle) {
  Function fn = parse_one(R"(
func @g(%in: ptr<i16>) {
entry:
  %a = load <8 x i16> %in
  ret
})");
  ValueId a = ids_of(fn, Opcode::Load)[0];
  GatherTree tree = build_gather_tree(fn, {a, a});
  ASSERT_EQ(tree.shuffles.size(), 1u);
  std::vector<int> iota(16);
  for (int k = 0; k < 16; ++k) iota[k] = k;
  EXPECT_EQ(tree.shuffles[0].mask, iota);
  EXPECT_EQ(tree.shuffles[0].operands, (std::vector<ValueId>{a, a}));
}

TEST(Cost, EmptyGraphIsNotProfitable) {
  Function fn = parse_one("func @f() {\nentry:\n  ret\n}\n");
  RevecGraph g;
  CostReport c = estimate_profit(fn, g, TargetDesc::named("gen256"));
  EXPECT_EQ(c.benefit, 0);
  EXPECT_FALSE(c.profitable());
}

TEST(Cost, ZeroGatherCostUnlocksEveryMergeableGraph) {
  for (const auto& p : testsupport::corpus_files())
    for (const auto& fn : parse(testsupport::read_text(p)).functions)
      for (const char* name : {"gen256", "gen512"}) {
        TargetDesc t = TargetDesc::named(name);
        t.costs.set("gather", CostTable::kAnyWidth, 0);
        t.costs.set("extract", CostTable::kAnyWidth, 0);
        auto out = run_pipeline(ProgramModule{std::nullopt, {fn}}, t, default_imap(t));
        for (const auto& g : out.reports[0].graphs) {
          int mergeable = 0;
          for (const auto& [k, n] : g.packs_by_kind)
            if (k != "gather-leaf") mergeable += n;
          if (mergeable > 0) {
            EXPECT_TRUE(g.applied) << p << " " << name << " " << g.note;
          }
        }
      }
}

TEST(Transform, ExtractForEscapingMember) {
  Function fn = testsupport::load_corpus("extract.vir").functions[0];
  TargetDesc t = TargetDesc::named("gen256");
  auto out = revectorize(fn, t, default_imap(t));
  ASSERT_EQ(out.graphs.size(), 1u);
  EXPECT_TRUE(out.graphs[0].applied);
  EXPECT_EQ(out.graphs[0].cost.extract_cost, 1);
  EXPECT_EQ(ids_of(out.fn, Opcode::ExtractSubvec).size(), 1u);
  EXPECT_EQ(check_equivalence(fn, out.fn, 100, 1).verdict, Verdict::Pass);
}

TEST(Transform, PatternAReusesSource) {
  Built b = build_all(testsupport::load_corpus("split_copy.vir").functions[0], "loop", "gen256");
  TargetDesc t = TargetDesc::named("gen256");
  auto out = revectorize(b.fn, t, default_imap(t));
  EXPECT_TRUE(ids_of(out.fn, Opcode::Shuffle).empty());
  auto stores = ids_of(out.fn, Opcode::Store);
  auto loads = ids_of(out.fn, Opcode::Load);
  ASSERT_EQ(stores.size(), 1u);
  ASSERT_EQ(loads.size(), 1u);
  EXPECT_EQ(out.fn.find_inst(stores[0])->operands[0], loads[0]);
}

TEST(Transform, PatternBWidensMaskOnly) {
  Function fn = testsupport::load_corpus("interleave.vir").functions[0];
  TargetDesc t = TargetDesc::named("gen256");
  auto out = run_pipeline(ProgramModule{std::nullopt, {fn}}, t, default_imap(t));
  const Function& w = out.transformed.functions[0];
  auto sh = ids_of(w, Opcode::Shuffle);
  ASSERT_EQ(sh.size(), 1u);
  const Instruction* s = w.find_inst(sh[0]);
  EXPECT_EQ(s->mask, (std::vector<int>{0, 8, 1, 9, 2, 10, 3, 11, 4, 12, 5, 13, 6, 14, 7, 15}));
  for (ValueId o : s->operands) EXPECT_EQ(*w.type_of(o), Type::vector(ScalarKind::I16, 8));
}

TEST(Transform, WidenPackAt512UsesFourToOnePackus) {
  Function fn = testsupport::load_corpus("widen_pack.vir").functions[0];
  TargetDesc t = TargetDesc::named("gen512");
  auto out = run_pipeline(ProgramModule{std::nullopt, {fn}}, t, default_imap(t));
  const Function& w = out.transformed.functions[0];
  auto calls = ids_of(w, Opcode::Call);
  ASSERT_EQ(calls.size(), 1u);
  EXPECT_EQ(w.find_inst(calls[0])->callee, "packus.i32.512");
}

TEST(Transform, OutputVerifiesAndRoundTrips) {
  for (const auto& p : testsupport::corpus_files())
    for (const char* name : {"gen128", "gen256", "gen512"}) {
      TargetDesc t = TargetDesc::named(name);
      auto out = run_pipeline(parse(testsupport::read_text(p)), t, default_imap(t));
      EXPECT_TRUE(verify(out.transformed).empty()) << p << " " << name;
      auto again = parse(print(out.transformed));
      EXPECT_TRUE(structurally_equal(again, out.transformed)) << p << " " << name;
    }
}

TEST(Transform, Gen128ChangesNothing) {
  for (const auto& p : testsupport::corpus_files()) {
    TargetDesc t = TargetDesc::named("gen128");
    auto m = parse(testsupport::read_text(p));
    auto out = run_pipeline(m, t, default_imap(t));
    for (const auto& r : out.reports)
      for (const auto& g : r.graphs) EXPECT_FALSE(g.applied) << p;
  }
}
