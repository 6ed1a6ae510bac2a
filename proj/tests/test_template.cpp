#include <gtest/gtest.h>

#include <random>

#include "expanse/error.hpp"
#include "expanse/template.hpp"
#include "fixtures.hpp"

using namespace expanse;
using fixtures::toks;

TEST(MaskFormat, Validation) {
  EXPECT_NO_THROW(check_mask_format("<M{i}>"));
  EXPECT_NO_THROW(check_mask_format("[MASK_{i}]"));
  EXPECT_THROW(check_mask_format("<M>"), ValidationError);
  EXPECT_THROW(check_mask_format("{i}{i}"), ValidationError);
  EXPECT_THROW(check_mask_format("<M {i}>"), ValidationError);
  EXPECT_EQ(render_slot("<M{i}>", 12), "<M12>");
}

TEST(MakeDual, SlotsAlternate) {
  const auto t = make_dual({{toks("a b"), true}, {toks("c"), false}, {toks("d"), true}, {toks("e f"), false}});
  EXPECT_EQ(t.input.render("<M{i}>"), toks("a b <M1> d <M2>"));
  EXPECT_EQ(t.target.render("<M{i}>"), toks("<M1> c <M2> e f"));
  EXPECT_NO_THROW(validate(t));
  EXPECT_EQ(reconstruct(t), toks("a b c d e f"));
}

TEST(MakeDual, SameSideRunsCoalesce) {
  const auto t = make_dual({{toks("a"), true}, {toks("b"), true}, {toks("c"), false}, {{}, false}});
  EXPECT_EQ(t.input.render("<M{i}>"), toks("a b <M1>"));
  EXPECT_EQ(t.target.render("<M{i}>"), toks("<M1> c"));
}

TEST(MakeDual, NoInsertionsMeansEmptyTarget) {
  const auto t = make_dual({{toks("a b"), true}});
  EXPECT_EQ(t.input.render("<M{i}>"), toks("a b"));
  EXPECT_TRUE(t.target.segments.empty());
  EXPECT_EQ(reconstruct(t), toks("a b"));
}

TEST(MakeDual, RandomSplicesAgree) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 500; ++n) {
    std::vector<LabeledRun> runs;
    TokenSeq full;
    const int k = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < k; ++i) {
      LabeledRun r;
      const int len = static_cast<int>(rng() % 3);
      for (int j = 0; j < len; ++j) r.tokens.push_back("t" + std::to_string(rng() % 5));
      r.in_input = rng() % 2;
      full.insert(full.end(), r.tokens.begin(), r.tokens.end());
      runs.push_back(r);
    }
    const auto t = make_dual(runs);
    EXPECT_NO_THROW(validate(t));
    EXPECT_EQ(reconstruct(t), full);
    if (t.input.slot_count() > 0) {
      EXPECT_EQ(splice(t.target, t.input.literal_runs()), full);
      EXPECT_EQ(t.input.slot_count(), t.target.literal_runs().size());
    }
  }
}

TEST(Splice, CountMismatchIsError) {
  const auto t = make_dual({{toks("a"), true}, {toks("b"), false}});
  EXPECT_THROW(splice(t.input, {}), ValidationError);
}

TEST(Reconstruct, NullRunsAreEmpty) {
  const auto t = make_dual({{toks("<null>"), false}, {toks("a"), true}, {toks("b"), false}});
  EXPECT_EQ(reconstruct(t, "<null>"), toks("a b"));
}

TEST(Validate, BadNumberingRejected) {
  InfillTemplatePair t;
  t.input.segments = {Slot{2}, Literal{toks("a")}};
  EXPECT_THROW(validate(t), ValidationError);
}

TEST(TemplateFromTokens, ParsesRenderedForm) {
  const auto t = make_dual({{toks("a"), true}, {toks("b c"), false}, {toks("d"), true}, {toks("e"), false}});
  for (const char* fmt : {"<M{i}>", "[X{i}]", "__{i}"}) {
    EXPECT_EQ(template_from_tokens(t.input.render(fmt), fmt), t.input);
    EXPECT_EQ(template_from_tokens(t.target.render(fmt), fmt), t.target);
  }
}

TEST(TemplateFromTokens, LookalikesStayLiteral) {
  const auto t = template_from_tokens(toks("<M> <Mx> <M0> <M3>"), "<M{i}>");
  ASSERT_EQ(t.segments.size(), 2u);
  EXPECT_EQ(std::get<Literal>(t.segments[0]).tokens, toks("<M> <Mx> <M0>"));
  EXPECT_EQ(std::get<Slot>(t.segments[1]).index, 3u);
}
