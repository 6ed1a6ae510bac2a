#include <gtest/gtest.h>

#include <random>

#include "expanse/error.hpp"
#include "expanse/treebank.hpp"
#include "fixtures.hpp"

using namespace expanse;
using namespace expanse::treebank;

namespace {

// Straight recursive skeleton for Chinese trees: keep a child unless its label
// is prunable and it is small enough.
void zh_reference(const ConstNode& n, std::size_t max, TokenSeq& out) {
  if (n.is_leaf()) {
    if (n.label != "-NONE-") out.push_back(*n.leaf_token);
    return;
  }
  static const std::vector<std::string> kDrop = {"DNP", "CP", "DVP", "ADVP", "QP", "LCP", "PP"};
  for (const auto& c : n.children) {
    const bool drop = std::find(kDrop.begin(), kDrop.end(), c.label) != kDrop.end() && leaf_count(c) <= max;
    if (!drop) zh_reference(c, max, out);
  }
}

ConstNode random_zh_tree(std::mt19937_64& rng, int depth) {
  static const std::vector<std::string> kPhrase = {"IP", "VP", "NP", "DNP", "CP", "ADVP", "PP", "QP", "LCP"};
  static const std::vector<std::string> kTag = {"NN", "VV", "DEG", "P", "AD", "CD", "M", "LC"};
  std::uniform_int_distribution<int> coin(0, 9);
  ConstNode n;
  if (depth == 0 || coin(rng) < 3) {
    n.label = kTag[rng() % kTag.size()];
    n.leaf_token = "t" + std::to_string(rng() % 50);
    return n;
  }
  n.label = kPhrase[rng() % kPhrase.size()];
  const int kids = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < kids; ++i) n.children.push_back(random_zh_tree(rng, depth - 1));
  return n;
}

}  // namespace

TEST(ParseTree, Figure1Yield) {
  const auto tree = parse_tree(fixtures::kFigure1Tree);
  EXPECT_EQ(tree.label, "ROOT");
  EXPECT_EQ(yield_tokens(tree), fixtures::toks("i truly love you with all my heart"));
  EXPECT_EQ(leaf_count(tree), 8u);
}

TEST(ParseTree, RoundTripsThroughString) {
  const auto tree = parse_tree(fixtures::kFigure1Tree);
  EXPECT_EQ(parse_tree(to_string(tree)), tree);
}

TEST(ParseTree, UnlabeledOuterBracketIsRoot) {
  const auto tree = parse_tree("( (S (NP (NN dog)) (VP (VBZ barks))) )");
  EXPECT_EQ(tree.label, "ROOT");
  EXPECT_EQ(yield_tokens(tree), fixtures::toks("dog barks"));
}

TEST(ParseTree, UnbalancedParenReportsOffset) {
  try {
    parse_tree("(S (NP (NN dog)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
  EXPECT_THROW(parse_tree("(S (NP (NN dog))))"), ParseError);
  EXPECT_THROW(parse_tree(""), ParseError);
}

TEST(ParseTree, BracketTokensRenderInYield) {
  const auto tree = parse_tree("(S (NP (NN x) (-LRB- -LRB-) (NN y) (-RRB- -RRB-)) (VP (VBZ is)))");
  EXPECT_EQ(yield_tokens(tree), fixtures::toks("x ( y ) is"));
}

TEST(ParseTree, NoneLeavesSkipped) {
  const auto tree = parse_tree("(S (NP-SBJ (-NONE- *T*-1)) (VP (VBZ runs)))");
  EXPECT_EQ(yield_tokens(tree), fixtures::toks("runs"));
}

TEST(NormalizeLabel, StripsFunctionTags) {
  EXPECT_EQ(normalize_label("NP-SBJ"), "NP");
  EXPECT_EQ(normalize_label("NP=2"), "NP");
  EXPECT_EQ(normalize_label("PP-LOC-1"), "PP");
  EXPECT_EQ(normalize_label("-LRB-"), "-LRB-");
  EXPECT_EQ(normalize_label("-NONE-"), "-NONE-");
}

TEST(PruneEnglish, Figure1) {
  const auto out = prune_english(parse_tree(fixtures::kFigure1Tree));
  EXPECT_EQ(out.skeleton, fixtures::toks("i love you"));
  EXPECT_EQ(out.pruned_spans, (std::vector<Span>{{1, 2}, {4, 8}}));
}

TEST(PruneEnglish, TreeToPairIsCtp) {
  const auto p = tree_to_pair(parse_tree(fixtures::kFigure1Tree), Language::en, "f1");
  EXPECT_EQ(p.provenance, Provenance::CTP);
  EXPECT_EQ(remove_spans(p.expansion, p.modifier_spans), p.source);
}

TEST(PruneEnglish, OversizedPpKept) {
  std::string np;
  for (int i = 0; i < 10; ++i) np += " (NN n" + std::to_string(i) + ")";
  const auto tree = parse_tree("(S (NP (PRP i)) (VP (VBP sit) (PP (IN with)" + std::string("(NP") + np + "))))");
  const auto out = prune_english(tree);
  EXPECT_EQ(out.skeleton.size(), 13u);
  EXPECT_TRUE(out.pruned_spans.empty());
  const auto loose = prune_english(tree, 11);
  EXPECT_EQ(loose.skeleton, fixtures::toks("i sit"));
}

TEST(PruneEnglish, WhSbarDropped) {
  const auto tree = parse_tree(
      "(S (NP (NP (DT the) (NN man)) (SBAR (WHNP (WP who)) (S (VP (VBD left))))) (VP (VBD smiled)))");
  EXPECT_EQ(prune_english(tree).skeleton, fixtures::toks("the man smiled"));
}

TEST(PruneEnglish, NpInternalModifiersDropped) {
  const auto tree = parse_tree("(S (NP (CD two) (JJ big) (NNS dogs)) (VP (VBD ran) (ADVP (RB fast))))");
  EXPECT_EQ(prune_english(tree).skeleton, fixtures::toks("dogs ran"));
}

TEST(PruneEnglish, ParentheticalDroppedAsOneRun) {
  const auto tree =
      parse_tree("(S (NP (NN x) (-LRB- -LRB-) (NN y) (-RRB- -RRB-)) (VP (VBZ is) (NP (NN z))))");
  const auto out = prune_english(tree);
  EXPECT_EQ(out.skeleton, fixtures::toks("x is z"));
  EXPECT_EQ(out.pruned_spans, (std::vector<Span>{{1, 4}}));
}

TEST(PruneEnglish, FunctionTagsNormalizedBeforeRules) {
  const auto tree = parse_tree("(S (NP-SBJ (NN cats)) (VP (VBP nap) (PP-LOC (IN in) (NP (NN sun)))))");
  EXPECT_EQ(prune_english(tree).skeleton, fixtures::toks("cats nap"));
}

TEST(PruneEnglish, EverythingPrunedIsError) {
  const auto tree = parse_tree("(S (ADVP (RB quickly)))");
  EXPECT_THROW(prune_english(tree), ValidationError);
}

TEST(PruneChinese, AdvpDropped) {
  const auto tree = parse_tree("(IP (NP (NR 林丹)) (VP (ADVP (AD 如愿以偿地)) (VP (VV 获得) (NP (NN 冠军)))))");
  const auto out = prune_chinese(tree);
  EXPECT_EQ(out.skeleton, fixtures::toks("林丹 获得 冠军"));
  EXPECT_EQ(out.pruned_spans, (std::vector<Span>{{1, 2}}));
}

TEST(PruneChinese, TwelveLeafCpKept) {
  std::string cp = "(CP";
  for (int i = 0; i < 12; ++i) cp += " (NN c" + std::to_string(i) + ")";
  cp += ")";
  const auto tree = parse_tree("(IP (NP " + cp + " (NN 人)) (VP (VV 来)))");
  EXPECT_EQ(prune_chinese(tree).skeleton.size(), 14u);
  EXPECT_EQ(prune_chinese(tree, 12).skeleton, fixtures::toks("人 来"));
}

TEST(PruneChinese, MatchesReferenceOnRandomTrees) {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto tree = random_zh_tree(rng, 5);
    if (tree.is_leaf()) continue;
    TokenSeq expect;
    zh_reference(tree, kDefaultMaxPrunableLeaves, expect);
    if (expect.empty()) {
      EXPECT_THROW(prune_chinese(tree), ValidationError);
      continue;
    }
    const auto got = prune_chinese(tree);
    EXPECT_EQ(got.skeleton, expect) << to_string(tree);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Prune, GuardMonotone) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto tree = random_zh_tree(rng, 6);
    if (tree.is_leaf()) continue;
    std::size_t prev = 0;
    bool first = true;
    for (std::size_t max : {1u, 2u, 4u, 8u, 16u}) {
      try {
        const auto out = prune_chinese(tree, max);
        if (!first) EXPECT_LE(out.skeleton.size(), prev);
        prev = out.skeleton.size();
        first = false;
      } catch (const ValidationError&) {
        break;
      }
    }
  }
}

TEST(Prune, SkeletonReconstructsFromSpans) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const auto tree = random_zh_tree(rng, 5);
    if (tree.is_leaf()) continue;
    try {
      const auto p = tree_to_pair(tree, Language::zh, "t");
      EXPECT_EQ(remove_spans(p.expansion, p.modifier_spans), p.source);
      EXPECT_EQ(p.expansion, yield_tokens(tree));
    } catch (const ValidationError&) {
    }
  }
}
