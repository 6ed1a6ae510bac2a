#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "expanse/error.hpp"
#include "expanse/ngram_lm.hpp"
#include "fixtures.hpp"
#include "gen.hpp"

using namespace expanse;
using namespace expanse::lm;
using fixtures::toks;

TEST(Train, HandProbabilities) {
  for (double k : {0.01, 0.5, 1.0}) {
    const auto m = train({toks("a b")}, 2, k);
    EXPECT_EQ(m.vocab_size(), 4u);
    EXPECT_NEAR(m.prob({"a"}, "b"), (1 + k) / (1 + 4 * k), 1e-12);
    EXPECT_NEAR(m.prob({"a"}, "a"), k / (1 + 4 * k), 1e-12);
    EXPECT_NEAR(m.prob({"<bos>"}, "a"), (1 + k) / (1 + 4 * k), 1e-12);
    EXPECT_NEAR(m.prob({"b"}, "<eos>"), (1 + k) / (1 + 4 * k), 1e-12);
    EXPECT_NEAR(m.prob({"zzz"}, "a"), 0.25, 1e-12);
  }
}

TEST(Train, UnknownTokensMapToUnk) {
  const auto m = train({toks("a b")}, 2, 0.1);
  EXPECT_EQ(m.lookup("q"), kUnk);
  EXPECT_DOUBLE_EQ(m.prob({"a"}, "q"), m.prob({"a"}, kUnk));
}

TEST(Train, RejectsBadInput) {
  EXPECT_THROW(train({}, 3, 0.1), ValidationError);
  EXPECT_THROW(train({toks("a")}, 0, 0.1), ValidationError);
  EXPECT_THROW(train({toks("a")}, 2, 0.0), ValidationError);
}

TEST(Train, DistributionsNormalize) {
  std::mt19937_64 rng(41);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back(gen::random_tokens(rng, 1 + rng() % 8, 6));
  const auto m = train(corpus, 3, 0.05);
  for (const auto& [ctx, _] : m.counts()) {
    double total = 0;
    for (const auto& t : m.vocab()) total += m.prob(ctx, t);
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Nll, UniformPerplexityIsVocabSize) {
  const auto m = uniform_model({"a", "b", "c"});
  EXPECT_EQ(m.vocab_size(), 5u);
  const auto s = nll(m, toks("a b c a"));
  EXPECT_EQ(s.token_count, 5u);
  EXPECT_NEAR(s.perplexity(), 5.0, 1e-9);
}

TEST(Nll, HandSum) {
  const double k = 0.5;
  const auto m = train({toks("a b")}, 2, k);
  const double p = (1 + k) / (1 + 4 * k);
  EXPECT_NEAR(nll(m, toks("a b")).nll_sum, -3 * std::log(p), 1e-12);
}

TEST(Nll, Deterministic) {
  std::mt19937_64 rng(43);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 30; ++i) corpus.push_back(gen::random_tokens(rng, 5, 5));
  const auto a = train(corpus, 3, 0.01);
  const auto b = train(corpus, 3, 0.01);
  EXPECT_EQ(a, b);
  EXPECT_EQ(nll(a, corpus[0]).nll_sum, nll(b, corpus[0]).nll_sum);
}

TEST(Nll, LargerKFlattens) {
  const std::vector<TokenSeq> corpus = {toks("a b c"), toks("a b d")};
  double prev = 0;
  for (double k : {0.01, 0.1, 1.0, 10.0}) {
    const double ppl = nll(train(corpus, 2, k), toks("a b c")).perplexity();
    EXPECT_GT(ppl, prev);
    prev = ppl;
  }
}

TEST(SaveLoad, RoundTrip) {
  std::mt19937_64 rng(47);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(gen::random_tokens(rng, 6, 8));
  corpus.push_back(toks("with \"quotes\" and \\ backslash"));
  const auto m = train(corpus, 3, 0.25);
  std::stringstream buf;
  save(m, buf);
  const auto back = load(buf);
  EXPECT_EQ(back, m);
  EXPECT_EQ(nll(back, corpus[3]).nll_sum, nll(m, corpus[3]).nll_sum);
}

TEST(SaveLoad, BadMagicRejected) {
  std::istringstream in("NOT-A-MODEL\n");
  EXPECT_THROW(load(in), Error);
}

TEST(InfillNll, FullTargetMatchesSentenceScore) {
  // With every token in the target, infill scoring is plain scoring minus <eos>.
  const auto m = train({toks("a b c"), toks("b c a")}, 3, 0.1);
  const auto y = toks("a b c a");
  const auto t = make_dual({{{}, true}, {y, false}});
  const auto inf = infill_nll(m, t);
  const auto full = nll(m, y);
  EXPECT_EQ(inf.token_count, y.size());
  const double eos = -m.log_prob(m.context_of(y, y.size()), kEos);
  EXPECT_NEAR(inf.nll_sum, full.nll_sum - eos, 1e-9);
}

TEST(InfillNll, ScoresOnlyTargetLiterals) {
  const auto m = train({toks("a b c d")}, 2, 0.1);
  const auto t = make_dual({{toks("a"), true}, {toks("b"), false}, {toks("c"), true}, {toks("d"), false}});
  const auto s = infill_nll(m, t);
  EXPECT_EQ(s.token_count, 2u);
  const double expect = -m.log_prob({"a"}, "b") - m.log_prob({"c"}, "d");
  EXPECT_NEAR(s.nll_sum, expect, 1e-12);
}

TEST(InfillNll, NoScorableTokens) {
  const auto m = train({toks("a b")}, 2, 0.1);
  const auto t = make_dual({{toks("a b"), true}});
  EXPECT_THROW(infill_nll(m, t), ValidationError);
}
