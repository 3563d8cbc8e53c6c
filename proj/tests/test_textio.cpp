#include "revec/textio.hpp"
#include "revec/verify.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace revec;

TEST(Parse, EmptyInputIsEmptyModule) {
  EXPECT_TRUE(parse("").functions.empty());
  EXPECT_TRUE(parse("  ; only a comment\n").functions.empty());
}

TEST(Parse, WidenPackKernelHasOneLoop) {
  auto m = testsupport::load_corpus("widen_pack.vir");
  ASSERT_EQ(m.functions.size(), 1u);
  const Function& fn = m.functions[0];
  std::size_t back_edges = 0;
  for (const auto& b : fn.blocks)
    for (const auto& s : b.successors())
      if (fn.block_index(s) <= fn.block_index(b.label)) ++back_edges;
  EXPECT_EQ(back_edges, 1u);
}

TEST(Parse, MaskIndexOutOfRange) {
  try {
    parse(R"(
func @f(%p: ptr<i32>) {
entry:
  %a = load <4 x i32> %p
  %s = shuffle %a, %a, [0, 99]
  ret
})");
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("mask index out of range"), std::string::npos) << e.what();
  }
}

TEST(Parse, ErrorsCarryLineAndColumn) {
  try {
    parse("func @f() {\nentry:\n  %x = frob i32 %y\n  ret\n}\n", "k.vir");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("k.vir:3:"), std::string::npos) << e.what();
  }
}

TEST(Parse, UndefinedValueIsAnError) {
  EXPECT_THROW(parse("func @f(%p: ptr<i32>) {\nentry:\n  store %nope, %p\n  ret\n}\n"), ParseError);
}

TEST(Parse, LaneLiteralRange) {
  EXPECT_THROW(parse("func @f() {\nentry:\n  %c = const u8 256\n  ret\n}\n"), ParseError);
  EXPECT_THROW(parse("func @f() {\nentry:\n  %c = const i8 -129\n  ret\n}\n"), ParseError);
  EXPECT_NO_THROW(parse("func @f() {\nentry:\n  %c = const i8 -128\n  ret\n}\n"));
}

TEST(RoundTrip, Corpus) {
  for (const auto& p : testsupport::corpus_files()) {
    auto m = parse(testsupport::read_text(p));
    std::string once = print(m);
    auto again = parse(once);
    EXPECT_TRUE(structurally_equal(m, again)) << p;
    EXPECT_EQ(print(again), once) << p;
  }
}

TEST(RoundTrip, UndefMaskLanes) {
  auto m = parse(R"(
func @f(%p: ptr<i32>) {
entry:
  %a = load <4 x i32> %p
  %s = shuffle %a, %a, [u, 1, u, 3]
  store %s, %p
  ret
})");
  std::string text = print(m);
  EXPECT_NE(text.find("[u, 1, u, 3]"), std::string::npos) << text;
  auto again = parse(text);
  const auto& sh = again.functions[0].blocks[0].insts[1];
  ASSERT_EQ(sh.op, Opcode::Shuffle);
  EXPECT_EQ(sh.mask[0], kUndefLane);
  EXPECT_EQ(sh.mask[1], 1);
}

TEST(RoundTrip, AllScalarTypes) {
  auto m = parse(R"(
target gen256

func @types(%a: ptr<i8>, %b: ptr<u8>, %c: ptr<i16>, %d: ptr<u16>, %e: ptr<i32>, %f: ptr<u32>, %g: ptr<i64>, %h: ptr<u64>, %k: ptr<f32>) -> i1 reassoc {
entry:
  %t = const i1 1
  %va = const <16 x i8> [-128, 127, 0, 1, -1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, u]
  store %va, %a
  %vb = const <16 x u8> [255, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14]
  store %vb, %b
  %vc = const <8 x i16> [-32768, 32767, 0, 0, 0, 0, 0, 0]
  store %vc, %c
  %vd = const <8 x u16> [65535, 0, 0, 0, 0, 0, 0, 1]
  store %vd, %d
  %ve = const <4 x i32> [-2147483648, 2147483647, 0, 1]
  store %ve, %e
  %vf = const <4 x u32> [4294967295, 0, 0, 1]
  store %vf, %f
  %vg = const <2 x i64> [-9223372036854775808, 9223372036854775807]
  store %vg, %g
  %vh = const <2 x u64> [18446744073709551615, 0]
  store %vh, %h
  %vk = const <4 x f32> [1.5, -0.25, 0.0, 3.0e10]
  store %vk, %k
  ret %t
})");
  auto again = parse(print(m));
  EXPECT_TRUE(structurally_equal(m, again));
  EXPECT_EQ(print(again), print(m));
  EXPECT_TRUE(again.functions[0].reassoc);
  EXPECT_EQ(again.target_hint, std::optional<std::string>("gen256"));
}

TEST(RoundTrip, PrintedNamesAvoidParameterNames) {
  auto m = parse(R"(
func @f(%0: ptr<i32>) {
entry:
  %a = load <4 x i32> %0
  store %a, %0
  ret
})");
  auto again = parse(print(m));
  EXPECT_TRUE(structurally_equal(m, again));
}

// Mutated corpus text must either parse or raise one of the two documented
// error types; nothing else escapes and nothing crashes.
TEST(ParserTotality, MutatedCorpusText) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "%@<>[](){},:;=x0123456789 \nabcdefghijklmnopqrstuvwxyz-.u";
  std::size_t parsed = 0, rejected = 0;
  for (const auto& p : testsupport::corpus_files()) {
    const std::string text = testsupport::read_text(p);
    for (int trial = 0; trial < 150; ++trial) {
      std::string s = text;
      int edits = 1 + static_cast<int>(rng() % 4);
      for (int e = 0; e < edits && !s.empty(); ++e) {
        std::size_t at = rng() % s.size();
        switch (rng() % 3) {
        case 0: s[at] = alphabet[rng() % alphabet.size()]; break;
        case 1: s.erase(at, 1 + rng() % 8); break;
        default: s.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
        }
      }
      try {
        parse(s);
        ++parsed;
      } catch (const ParseError&) {
        ++rejected;
      } catch (const VerifyError&) {
        ++rejected;
      }
    }
  }
  EXPECT_GT(rejected, 0u);
  EXPECT_EQ(parsed + rejected, testsupport::corpus_files().size() * 150);
}

TEST(ParserTotality, RandomBytes) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s(rng() % 64, '\0');
    for (auto& c : s) c = static_cast<char>(rng() % 256);
    try {
      parse(s);
    } catch (const ParseError&) {
    } catch (const VerifyError&) {
    }
  }
}

TEST(FormatLane, SignedAndFloat) {
  EXPECT_EQ(format_lane(ScalarType{ScalarKind::I16}, 0xFFFF), "-1");
  EXPECT_EQ(format_lane(ScalarType{ScalarKind::U16}, 0xFFFF), "65535");
  EXPECT_EQ(format_lane(ScalarType{ScalarKind::I1}, 1), "1");
}
