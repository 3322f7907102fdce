#include <gtest/gtest.h>

#include <random>

#include "nes/diff.hpp"
#include "nes/error.hpp"
#include "support.hpp"

using namespace nes;
using nes::testing::lcs_oracle;

namespace {

const char *kHelloPre = "def Hello()\n  print(\"Say\")\n  print(\"Hello\")";
const char *kHelloPost = "def GoodBye()\n  print(\"Say\")\n  print(\"GoodBye\")";
const char *kHelloNes = "1-| def Hello()\n"
                        "1+| def GoodBye()\n"
                        "2 |   print(\"Say\")\n"
                        "3-|   print(\"Hello\")\n"
                        "3+|   print(\"GoodBye\")";

std::size_t changes(const DeltaScript &d) {
  std::size_t n = 0;
  for (const auto &h : d.hunks) {
    n += h.kind != HunkKind::context ? 1 : 0;
  }
  return n;
}

} // namespace

TEST(ComputeDiff, HelloGoodbyeHunks) {
  const auto d = compute_diff(kHelloPre, kHelloPost);
  const std::vector<LineHunk> want = {
      LineHunk::removed(1, "def Hello()"),          LineHunk::inserted(1, "def GoodBye()"),
      LineHunk::unchanged(2, 2, "  print(\"Say\")"), LineHunk::removed(3, "  print(\"Hello\")"),
      LineHunk::inserted(3, "  print(\"GoodBye\")"),
  };
  EXPECT_EQ(d.hunks, want);
  EXPECT_EQ(d.pre_range, (LineRange{1, 3}));
  EXPECT_EQ(d.post_range, (LineRange{1, 3}));
  EXPECT_EQ(d.pre_region, kHelloPre);
  EXPECT_EQ(d.post_region, kHelloPost);
}

TEST(ComputeDiff, IdentityIsEmpty) {
  for (const char *x : {"", "a", "a\nb\n", "x\n\ny"}) {
    const auto d = compute_diff(x, x);
    EXPECT_TRUE(d.empty());
    EXPECT_EQ(changes(d), 0U);
    EXPECT_TRUE(d.pre_range.empty());
    EXPECT_TRUE(d.post_range.empty());
  }
}

TEST(ComputeDiff, InsertIntoEmpty) {
  const auto d = compute_diff("", "a");
  ASSERT_EQ(d.hunks.size(), 1U);
  EXPECT_EQ(d.hunks[0], LineHunk::inserted(1, "a"));
  EXPECT_EQ(render_nes_diff(d), "1+| a");
}

TEST(ComputeDiff, TrailingNewlineIsNotALineChange) {
  EXPECT_TRUE(compute_diff("a\nb", "a\nb\n").empty());
}

TEST(ComputeDiff, DeletionsBeforeInsertions) {
  const auto d = compute_diff("a\nx\ny\nb", "a\np\nq\nb");
  EXPECT_EQ(render_nes_diff(d), "2-| x\n3-| y\n2+| p\n3+| q");
}

TEST(ComputeDiff, InteriorContextOnly) {
  const auto d = compute_diff("h\na\nk1\nk2\nb\nt", "h\nA\nk1\nk2\nB\nt");
  EXPECT_EQ(render_nes_diff(d), "2-| a\n2+| A\n3 | k1\n4 | k2\n5-| b\n5+| B");
  EXPECT_EQ(d.pre_range, (LineRange{2, 5}));
}

TEST(ComputeDiff, PureDeletionKeepsPosition) {
  const auto d = compute_diff("a\nb\nc", "a\nc");
  EXPECT_EQ(d.pre_range, (LineRange{2, 2}));
  EXPECT_EQ(d.post_range, (LineRange{2, 1}));
  EXPECT_EQ(apply_diff("a\nb\nc", d), "a\nc");
}

TEST(ComputeDiff, MinimalAgainstLcsOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto a = nes::testing::random_lines(rng, 200);
    const auto b = nes::testing::mutate(rng, a, 1 + static_cast<int>(rng() % 20), 200);
    const auto d = diff_lines(a, b);
    EXPECT_EQ(changes(d), a.size() + b.size() - 2 * lcs_oracle(a, b)) << "pair " << i;
  }
}

TEST(ComputeDiff, Deterministic) {
  std::mt19937_64 rng(11);
  const auto a = join_lines(nes::testing::random_lines(rng, 100));
  const auto b = join_lines(nes::testing::mutate(rng, split_lines(a), 10, 100));
  EXPECT_EQ(render_nes_diff(compute_diff(a, b)), render_nes_diff(compute_diff(a, b)));
}

TEST(ApplyDiff, HelloGoodbye) { EXPECT_EQ(apply_diff(kHelloPre, compute_diff(kHelloPre, kHelloPost)), kHelloPost); }

TEST(ApplyDiff, EmptyDeltaIsIdentity) {
  EXPECT_EQ(apply_diff("x\ny\n", DeltaScript{}), "x\ny\n");
  EXPECT_EQ(apply_diff("", DeltaScript{}), "");
}

TEST(ApplyDiff, RegionMismatch) {
  const auto d = compute_diff(kHelloPre, kHelloPost);
  EXPECT_THROW(apply_diff("def Hi()\n  print(\"Say\")\n  print(\"Hello\")", d), RegionMismatch);
  EXPECT_THROW(apply_diff("def Hello()", d), RegionMismatch);
}

TEST(ApplyDiff, PreservesTrailingNewline) {
  const auto d = compute_diff("a\nb\n", "a\nc\n");
  EXPECT_EQ(apply_diff("a\nb\n", d), "a\nc\n");
  EXPECT_EQ(apply_diff("a\nb", d), "a\nc");
}

TEST(ApplyDiff, RandomRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const bool nl = rng() % 2 == 0;
    const auto a = nes::testing::random_lines(rng, 200);
    const auto b = nes::testing::mutate(rng, a, 1 + static_cast<int>(rng() % 30), 200);
    const auto pre = join_text(a, nl);
    const auto post = join_text(b, nl);
    ASSERT_TRUE(nes::testing::round_trips(pre, post, apply_diff(pre, compute_diff(pre, post)))) << "pair " << i;
  }
}

TEST(ApplyDiff, FinalNewlineFollowsPre) {
  // "a\n" -> "a\nb" adds a line; the result keeps pre's final newline.
  EXPECT_EQ(apply_diff("a\n", compute_diff("a\n", "a\nb")), "a\nb\n");
  EXPECT_EQ(apply_diff("", compute_diff("", "x\n")), "x");
}

TEST(DiffLines, OffsetsShiftNumbering) {
  const std::vector<std::string> pre = {"x"};
  const std::vector<std::string> post = {"y"};
  const auto d = diff_lines(pre, post, 119, 119);
  EXPECT_EQ(render_nes_diff(d), "120-| x\n120+| y");
}

TEST(RenderNesDiff, Golden) { EXPECT_EQ(render_nes_diff(compute_diff(kHelloPre, kHelloPost)), kHelloNes); }

TEST(RenderNesDiff, EmptyDelta) { EXPECT_EQ(render_nes_diff(DeltaScript{}), ""); }

TEST(ParseNesDiff, Golden) {
  EXPECT_EQ(parse_nes_diff(kHelloNes), compute_diff(kHelloPre, kHelloPost));
}

TEST(ParseNesDiff, EmptyText) { EXPECT_TRUE(parse_nes_diff("").empty()); }

TEST(ParseNesDiff, BadMarker) {
  try {
    parse_nes_diff("3x| foo");
    FAIL() << "expected FormatError";
  } catch (const FormatError &e) {
    EXPECT_EQ(e.line(), 1U);
  }
}

TEST(ParseNesDiff, ReportsLineOfFirstBadRow) {
  try {
    parse_nes_diff("1-| a\n1+| b\nnope");
    FAIL() << "expected FormatError";
  } catch (const FormatError &e) {
    EXPECT_EQ(e.line(), 3U);
  }
}

TEST(ParseNesDiff, MissingSeparator) {
  EXPECT_THROW(parse_nes_diff("1-|a"), FormatError);
  EXPECT_THROW(parse_nes_diff("-| a"), FormatError);
}

TEST(ParseNesDiff, NonMonotonicNumbering) {
  EXPECT_THROW(parse_nes_diff("3-| a\n2-| b"), NumberingError);
  EXPECT_THROW(parse_nes_diff("1+| a\n1+| b"), NumberingError);
}

TEST(ParseNesDiff, MultiDigitLineNumbers) {
  const std::string text = "120-| old\n120+| new";
  const auto d = parse_nes_diff(text);
  EXPECT_EQ(d.pre_range, (LineRange{120, 120}));
  EXPECT_EQ(render_nes_diff(d), text);
}

TEST(ParseNesDiff, CodecRoundTripOnRandomDeltas) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto a = nes::testing::random_lines(rng, 60);
    const auto b = nes::testing::mutate(rng, a, 1 + static_cast<int>(rng() % 8), 60);
    const int offset = static_cast<int>(rng() % 500);
    const auto d = diff_lines(a, b, offset, offset);
    ASSERT_EQ(parse_nes_diff(render_nes_diff(d)), d) << "delta " << i;
  }
}

TEST(CodeSnapshot, CursorBounds) {
  EXPECT_NO_THROW((CodeSnapshot{"", 1, ""}.validate()));
  EXPECT_NO_THROW((CodeSnapshot{"a\nb\n", 2, ""}.validate()));
  EXPECT_THROW((CodeSnapshot{"a\nb\n", 3, ""}.validate()), LineOutOfRange);
  EXPECT_THROW((CodeSnapshot{"a", 0, ""}.validate()), LineOutOfRange);
}
