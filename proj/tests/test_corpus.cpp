#include <gtest/gtest.h>

#include <sstream>

#include "expanse/corpus.hpp"
#include "expanse/error.hpp"
#include "fixtures.hpp"
#include "gen.hpp"

using namespace expanse;

TEST(ReadPairs, IdentityRecord) {
  std::istringstream in(
      R"({"id":"a","language":"en","source":["my","favorite","sport","is","basketball"],)"
      R"("expansion":["my","favorite","sport","is","basketball"],"modifier_spans":[],"provenance":"REF"})"
      "\n");
  const auto pairs = read_pairs(in);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].source, pairs[0].expansion);
  EXPECT_TRUE(pairs[0].modifier_spans.empty());
  EXPECT_EQ(pairs[0].provenance, Provenance::REF);
}

TEST(ReadPairs, Table1RecordHasFourSpans) {
  std::ostringstream out;
  write_pair(fixtures::table1_pair(), out);
  std::istringstream in(out.str());
  const auto pairs = read_pairs(in);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].modifier_spans.size(), 4u);
}

TEST(ReadPairs, OverlappingSpansRejected) {
  std::istringstream in(R"({"id":"a","language":"en","source":["c"],"expansion":["a","b","c"],)"
                        R"("modifier_spans":[[0,2],[1,3]],"provenance":"REF"})"
                        "\n");
  try {
    read_pairs(in);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("overlapping spans"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(ReadPairs, SpanOutOfRangeNamesField) {
  std::istringstream in(R"({"id":"a","language":"en","source":["a"],"expansion":["a","b"],)"
                        R"("modifier_spans":[[1,3]],"provenance":"REF"})"
                        "\n");
  try {
    read_pairs(in);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("modifier_spans"), std::string::npos);
  }
}

TEST(ReadPairs, MalformedJsonCarriesLineNumber) {
  std::istringstream in(R"({"id":"a","language":"en","source":["a"],"expansion":["a"],"provenance":"REF"})"
                        "\n{not json\n");
  try {
    read_pairs(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
}

TEST(ReadPairs, MissingSpansDecodeEmpty) {
  std::istringstream in(R"({"id":"a","language":"zh","source":["a"],"expansion":["a","b"],"provenance":"NSC"})"
                        "\n");
  const auto pairs = read_pairs(in);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_TRUE(pairs[0].modifier_spans.empty());
  EXPECT_FALSE(pairs[0].spans_populated());
}

TEST(ReadPairs, ReconstructionMismatchRejected) {
  std::istringstream in(R"({"id":"a","language":"en","source":["x"],"expansion":["a","b"],)"
                        R"("modifier_spans":[[0,1]],"provenance":"REF"})"
                        "\n");
  EXPECT_THROW(read_pairs(in), ValidationError);
}

TEST(ReadPairs, AdjacentSpansMerge) {
  std::istringstream in(R"({"id":"a","language":"en","source":["c"],"expansion":["a","b","c"],)"
                        R"("modifier_spans":[[0,1],[1,2]],"provenance":"REF"})"
                        "\n");
  const auto pairs = read_pairs(in);
  ASSERT_EQ(pairs[0].modifier_spans.size(), 1u);
  EXPECT_EQ(pairs[0].modifier_spans[0], (Span{0, 2}));
}

TEST(ReadPairs, UnknownFieldsSurviveRoundTrip) {
  const std::string line = R"({"id":"a","language":"en","source":["a"],"expansion":["a"],"modifier_spans":[],)"
                           R"("provenance":"REF","score":0.5,"meta":{"k":[1,2]}})";
  std::istringstream in(line + "\n");
  const auto pairs = read_pairs(in);
  std::ostringstream out;
  write_pairs(pairs, out);
  EXPECT_EQ(out.str(), line + "\n");
}

TEST(WritePairs, EmptyListWritesNothing) {
  std::ostringstream out;
  write_pairs({}, out);
  EXPECT_TRUE(out.str().empty());
}

TEST(WritePairs, OneLinePerPair) {
  std::ostringstream out;
  write_pairs({fixtures::table1_pair()}, out);
  const auto s = out.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1);
  EXPECT_EQ(s.back(), '\n');
}

TEST(WritePairs, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  std::vector<ExpansionPair> pairs;
  for (int i = 0; i < 100; ++i) pairs.push_back(gen::random_pair(rng, 12, 6, "p" + std::to_string(i)));
  std::stringstream buf;
  write_pairs(pairs, buf);
  EXPECT_EQ(read_pairs(buf), pairs);
}

TEST(SurfaceModifiers, Table1Runs) {
  const auto mods = surface_modifiers(fixtures::table1_pair());
  ASSERT_EQ(mods.size(), 4u);
  EXPECT_EQ(join(mods[0]), "when it comes to sports ,");
  EXPECT_EQ(join(mods[1]), "absolute");
  EXPECT_EQ(join(mods[2]), "of all time");
  EXPECT_EQ(join(mods[3]), ", and i 'm a huge fan of james");
}

TEST(SurfaceModifiers, NoSpansNoRuns) {
  const auto p = make_pair("a", Language::en, fixtures::toks("a b"), fixtures::toks("a b"), {}, Provenance::REF);
  EXPECT_TRUE(surface_modifiers(p).empty());
}

TEST(SurfaceModifiers, ConservationProperty) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto p = gen::random_pair(rng);
    std::size_t total = 0;
    for (const auto& m : surface_modifiers(p)) total += m.size();
    EXPECT_EQ(total, p.expansion.size() - p.source.size());
    EXPECT_EQ(remove_spans(p.expansion, p.modifier_spans), p.source);
  }
}

TEST(MakePair, RejectsWhitespaceTokens) {
  EXPECT_THROW(make_pair("a", Language::en, {"a b"}, {"a b"}, {}, Provenance::REF), ValidationError);
  EXPECT_THROW(make_pair("a", Language::en, {""}, {""}, {}, Provenance::REF), ValidationError);
}

TEST(TaggedText, PosLengthChecked) {
  std::istringstream in(R"({"id":"t","tokens":["a","b"],"pos":["DT"]})"
                        "\n");
  EXPECT_THROW(read_tagged(in), ValidationError);
}

TEST(TaggedText, OverlappingEntitiesRejected) {
  std::istringstream in(R"({"id":"t","tokens":["a","b","c"],"entities":[[0,2],[1,3]]})"
                        "\n");
  EXPECT_THROW(read_tagged(in), ValidationError);
}

TEST(TaggedText, RoundTrip) {
  const auto t = fixtures::table5_source();
  std::istringstream in(to_json(t).dump() + "\n");
  const auto back = read_tagged(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], t);
}
