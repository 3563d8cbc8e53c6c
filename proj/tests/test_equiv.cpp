#include "revec/equiv.hpp"
#include "revec/imap.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace revec;

TEST(TestCases, CornerOnly) {
  auto cases = gen_testcases(Type::vector(ScalarKind::I32, 4), 0, 123);
  ASSERT_EQ(cases.size(), 16u);
  std::set<std::uint8_t> first_bytes;
  for (const auto& c : cases) {
    EXPECT_EQ(c.origin, CaseOrigin::Corner);
    ASSERT_EQ(c.operands.size(), 2u);
    for (const auto& op : c.operands) {
      ASSERT_EQ(op.size(), 16u);
      for (auto byte : op) EXPECT_EQ(byte, op[0]);
      first_bytes.insert(op[0]);
    }
  }
  EXPECT_EQ(first_bytes, (std::set<std::uint8_t>{0x00, 0x55, 0xAA, 0xFF}));
}

TEST(TestCases, Deterministic) {
  auto a = gen_testcases(Type::vector(ScalarKind::I16, 8), 2000, 1);
  auto b = gen_testcases(Type::vector(ScalarKind::I16, 8), 2000, 1);
  ASSERT_EQ(a.size(), 2016u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].operands, b[i].operands);
  auto c = gen_testcases(Type::vector(ScalarKind::I16, 8), 2000, 2);
  EXPECT_NE(a.back().operands, c.back().operands);
}

TEST(TestCases, PatternBytesBecomeLanes) {
  Type t = Type::vector(ScalarKind::I8, 16);
  RtValue v = value_from_bytes(t, std::vector<std::uint8_t>(16, 0x55));
  for (auto l : v.lanes) EXPECT_EQ(l, 85u);
  RtValue w = value_from_bytes(Type::vector(ScalarKind::U16, 8), {0x34, 0x12, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_EQ(w.lanes[0], 0x1234u);
}

TEST(CountPassing, KnownPairs) {
  auto cases = gen_testcases(Type::vector(ScalarKind::I32, 8), 200, 9);
  EXPECT_EQ(count_passing("packus.i32.128", "packus.i32.256", 2, cases), cases.size());
  auto c16 = gen_testcases(Type::vector(ScalarKind::I16, 16), 200, 9);
  EXPECT_EQ(count_passing("phadd.i16.128", "phadd.i16.256", 2, c16), c16.size());
  // Same types, different semantics: a wrong pairing fails most cases.
  EXPECT_LT(count_passing("phadd.i16.128", "mulhi.i16.256", 2, c16), c16.size() / 10);
}

TEST(Discovery, ExpectedConversions) {
  IntrinsicMap m = discover_conversions();
  EXPECT_EQ(m.lookup("packus.i32.128", 2), std::optional<std::string>("packus.i32.256"));
  EXPECT_EQ(m.lookup("packus.i32.128", 4), std::optional<std::string>("packus.i32.512"));
  EXPECT_EQ(m.lookup("phadd.i16.128", 2), std::optional<std::string>("phadd.i16.256"));
  EXPECT_FALSE(m.lookup("phadd.i16.128", 4));
  EXPECT_FALSE(m.lookup("packus.i32.128", 8));
}

// Every family whose lane procedure repeats per 128-bit block and has a
// wider variant must be discovered at every factor the catalog allows.
TEST(Discovery, SeededFamiliesComplete) {
  IntrinsicMap m = discover_conversions();
  for (const char* fam : {"avg.u8", "mulhi.i16", "packss.i16", "packus.i32", "sad.u8"}) {
    std::string f(fam);
    EXPECT_EQ(m.lookup(f + ".128", 2), std::optional<std::string>(f + ".256")) << f;
    EXPECT_EQ(m.lookup(f + ".128", 4), std::optional<std::string>(f + ".512")) << f;
    EXPECT_EQ(m.lookup(f + ".256", 2), std::optional<std::string>(f + ".512")) << f;
  }
  for (const auto& [key, e] : m.entries()) EXPECT_EQ(e.tests_passed, 2016u) << e.narrow;
}

TEST(Discovery, ReplaySurvivesFreshSeed) {
  IntrinsicMap m = discover_conversions();
  ReplayReport r = replay_conversions(m, 1000, kDefaultSeed + 1);
  EXPECT_EQ(r.entries, m.size());
  EXPECT_TRUE(r.failures.empty());
}

TEST(Discovery, ShippedDatabaseIsRegenerable) {
  std::string shipped = testsupport::read_text(testsupport::source_dir() / "data" / "imap.txt");
  EXPECT_EQ(discover_conversions().serialize(), shipped);
}

TEST(Imap, SerializeParseRoundTrip) {
  IntrinsicMap m = discover_conversions();
  IntrinsicMap again = IntrinsicMap::parse(m.serialize());
  EXPECT_EQ(again.serialize(), m.serialize());
  EXPECT_EQ(again.size(), m.size());
}

TEST(Imap, ParseRejectsMalformed) {
  EXPECT_THROW(IntrinsicMap::parse("packus.i32.128 2\n"), std::invalid_argument);
  EXPECT_THROW(IntrinsicMap::parse("packus.i32.128 two packus.i32.256 5\n"), std::invalid_argument);
  EXPECT_NO_THROW(IntrinsicMap::parse("# revec-imap v1\n\n"));
}

TEST(Imap, FilteredDropsIllegalWide) {
  IntrinsicMap m = discover_conversions();
  IntrinsicMap f = m.filtered(TargetDesc::named("gen256"));
  EXPECT_TRUE(f.lookup("packus.i32.128", 2));
  EXPECT_FALSE(f.lookup("packus.i32.128", 4));
  EXPECT_EQ(lookup(f, "avg.u8.128", 2), std::optional<std::string>("avg.u8.256"));
}

TEST(Imap, SerializedLinesAreSorted) {
  std::string text = discover_conversions().serialize();
  std::istringstream in(text);
  std::string line, prev;
  std::getline(in, line);
  EXPECT_EQ(line, "# revec-imap v1");
  while (std::getline(in, line)) {
    EXPECT_LT(prev, line);
    prev = line;
  }
}
