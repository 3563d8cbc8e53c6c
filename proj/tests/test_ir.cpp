#include "revec/ir.hpp"
#include "revec/textio.hpp"
#include "revec/verify.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace revec;
using testsupport::parse_one;

namespace {

std::vector<Diagnostic> verify_text(const std::string& text) {
  return verify(parse_unverified(text).functions.at(0));
}

ValueId id_of(const Function& fn, Opcode op, int nth = 0) {
  for (const auto& b : fn.blocks)
    for (const auto& i : b.insts)
      if (i.op == op && nth-- == 0) return i.id;
  return kNoValue;
}

} // namespace

TEST(Verify, CorpusIsClean) {
  for (const auto& p : testsupport::corpus_files()) {
    auto m = parse_unverified(testsupport::read_text(p));
    EXPECT_TRUE(verify(m).empty()) << p;
  }
}

TEST(Verify, MaskIndexOutOfRange) {
  auto d = verify_text(R"(
func @f(%p: ptr<i16>) {
entry:
  %a = load <8 x i16> %p
  %s = shuffle %a, %a, [0, 1, 2, 3, 4, 5, 6, 16]
  store %s, %p
  ret
})");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].message, "mask index out of range");
}

TEST(Verify, PhiMissingPredecessor) {
  auto d = verify_text(R"(
func @f(%c: i1, %x: i32) -> i32 {
entry:
  condbr %c, a, b
a:
  br join
b:
  br join
join:
  %p = phi i32 [a: %x]
  ret %p
})");
  EXPECT_EQ(d.size(), 1u);
}

TEST(Verify, RejectsIllegalVectorWidth) {
  auto d = verify_text(R"(
func @f(%p: ptr<i32>) {
entry:
  %v = load <2 x i32> %p
  store %v, %p
  ret
})");
  EXPECT_FALSE(d.empty());
}

TEST(Verify, UseBeforeDefinitionInBlock) {
  auto d = verify_text(R"(
func @f(%p: ptr<i32>) {
entry:
  %a = load <4 x i32> %p
  %x = add <4 x i32> %y, %a
  %y = add <4 x i32> %a, %a
  store %x, %p
  ret
})");
  EXPECT_FALSE(d.empty());
}

TEST(Dominators, DiamondAndLoop) {
  Function fn = parse_one(R"(
func @f(%c: i1) {
entry:
  condbr %c, a, b
a:
  br join
b:
  br join
join:
  br loop
loop:
  condbr %c, loop, exit
exit:
  ret
})");
  DominatorTree dt(fn);
  EXPECT_TRUE(dt.dominates("entry", "join"));
  EXPECT_FALSE(dt.dominates("a", "join"));
  EXPECT_TRUE(dt.dominates("join", "exit"));
  EXPECT_TRUE(dt.dominates("loop", "loop"));
  EXPECT_FALSE(dt.dominates("exit", "loop"));
}

TEST(ReplaceAllUses, RewritesEveryUse) {
  Function fn = parse_one(R"(
func @f(%p: ptr<i32>) {
entry:
  %a = load <4 x i32> %p
  %b = load <4 x i32> %p
  %s = add <4 x i32> %a, %a
  store %s, %p
  ret
})");
  ValueId a = id_of(fn, Opcode::Load, 0), b = id_of(fn, Opcode::Load, 1);
  Function out = replace_all_uses(fn, a, b);
  EXPECT_EQ(out.use_count(a), 0u);
  EXPECT_EQ(out.use_count(b), 2u);
  EXPECT_TRUE(verify(out).empty());
}

TEST(ReplaceAllUses, NoUsesIsIdentity) {
  Function fn = parse_one(R"(
func @f(%p: ptr<i32>) {
entry:
  %a = load <4 x i32> %p
  %b = load <4 x i32> %p
  store %b, %p
  ret
})");
  Function out = replace_all_uses(fn, id_of(fn, Opcode::Load, 0), id_of(fn, Opcode::Load, 1));
  EXPECT_TRUE(structurally_equal(fn, out));
}

TEST(ReplaceAllUses, DominanceViolationThrows) {
  Function fn = parse_one(R"(
func @f(%p: ptr<i32>) {
entry:
  %a = load <4 x i32> %p
  store %a, %p
  %b = load <4 x i32> %p
  store %b, %p
  ret
})");
  EXPECT_THROW(replace_all_uses(fn, id_of(fn, Opcode::Load, 0), id_of(fn, Opcode::Load, 1)), IrError);
}

TEST(ReplaceAllUses, TypeMismatchThrows) {
  Function fn = parse_one(R"(
func @f(%p: ptr<i32>, %q: ptr<i16>) {
entry:
  %a = load <4 x i32> %p
  %b = load <8 x i16> %q
  store %a, %p
  store %b, %q
  ret
})");
  EXPECT_THROW(replace_all_uses(fn, id_of(fn, Opcode::Load, 0), id_of(fn, Opcode::Load, 1)), IrError);
}

TEST(EraseDead, RemovesDeadChainKeepsStores) {
  Function fn = parse_one(R"(
func @f(%p: ptr<i32>) {
entry:
  %k = const <4 x i32> [1, 2, 3, 4]
  %a = load <4 x i32> %p
  %b = add <4 x i32> %a, %a
  %c = mul <4 x i32> %b, %b
  %z = const <4 x i32> [0, 0, 0, 0]
  store %z, %p
  ret
})");
  Function out = erase_dead(fn);
  EXPECT_EQ(testsupport::count_insts(out, [](auto&, auto& i) { return i.op == Opcode::Store; }), 1u);
  EXPECT_EQ(testsupport::count_insts(out, [](auto&, auto&) { return true; }), 3u);
  EXPECT_TRUE(verify(out).empty());
}

TEST(EraseDead, Idempotent) {
  for (const auto& p : testsupport::corpus_files()) {
    for (const auto& fn : parse(testsupport::read_text(p)).functions) {
      Function once = erase_dead(fn);
      Function twice = erase_dead(once);
      EXPECT_TRUE(structurally_equal(once, twice)) << p;
    }
  }
}

TEST(StructuralEquality, IgnoresIdNumbering) {
  Function a = parse_one(R"(
func @f(%p: ptr<i32>) {
entry:
  %x = load <4 x i32> %p
  store %x, %p
  ret
})");
  Function b = parse_one(R"(
func @f(%p: ptr<i32>) {
entry:
  %something = load <4 x i32> %p
  store %something, %p
  ret
})");
  EXPECT_TRUE(structurally_equal(a, b));
}
