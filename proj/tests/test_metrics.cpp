#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "expanse/align.hpp"
#include "expanse/error.hpp"
#include "expanse/metrics.hpp"
#include "fixtures.hpp"
#include "gen.hpp"

using namespace expanse;
using namespace expanse::metrics;
using fixtures::toks;

namespace {

// Plain BLEU-4 for checking: clipped counts summed over the corpus.
double reference_bleu(const std::vector<TokenSeq>& cands, const std::vector<TokenSeq>& refs) {
  double log_sum = 0;
  int zeros = 0;
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    c += cands[i].size();
    r += refs[i].size();
  }
  for (int n = 1; n <= 4; ++n) {
    std::size_t match = 0, total = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      std::map<TokenSeq, int> cc, rc;
      for (std::size_t j = 0; j + n <= cands[i].size(); ++j) ++cc[TokenSeq(cands[i].begin() + j, cands[i].begin() + j + n)];
      for (std::size_t j = 0; j + n <= refs[i].size(); ++j) ++rc[TokenSeq(refs[i].begin() + j, refs[i].begin() + j + n)];
      for (const auto& [g, k] : cc) {
        total += k;
        match += std::min(k, rc[g]);
      }
    }
    double p;
    if (match == 0) {
      ++zeros;
      p = 1.0 / (std::pow(2.0, zeros) * static_cast<double>(std::max<std::size_t>(total, 1)));
    } else {
      p = static_cast<double>(match) / static_cast<double>(total);
    }
    log_sum += std::log(p) / 4;
  }
  if (c == 0) return 0;
  const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum);
}

std::shared_ptr<ExternalClient> equal_stub() {
  return std::make_shared<ExternalClient>(
      loopback([](const nlohmann::json& req) {
        nlohmann::json r;
        if (req["kind"] == "nli") {
          r["entailment"] = 0.75;
          return r;
        }
        std::size_t n = 0;
        if (req["kind"] == "lm") {
          n = req["input"].size() + 1;
        } else {
          for (const auto& t : req["target"]) n += t.get<std::string>().rfind("<M", 0) != 0;
        }
        r["nll_sum"] = 2.0 * static_cast<double>(n);
        r["token_count"] = n;
        return r;
      }),
      "loopback");
}

ExpansionPair pair(const std::string& x, const std::string& y) {
  return align::pair_from_alignment(toks(x), toks(y), "p", Language::en, Provenance::MODEL);
}

}  // namespace

TEST(LenNpos, Table1) {
  const auto f = metric_len_npos(fixtures::table1_pair());
  EXPECT_EQ(f.n_pos, 4u);
  EXPECT_EQ(f.len, fixtures::table1_pair().expansion.size() - 5);
}

TEST(LenNpos, ZeroSpans) {
  const auto f = metric_len_npos(pair("a b", "a b"));
  EXPECT_EQ(f.len, 0u);
  EXPECT_EQ(f.n_pos, 0u);
}

TEST(Bleu, Identity) {
  const std::vector<TokenSeq> c = {toks("the cat sat on the mat"), toks("a b c d e")};
  EXPECT_NEAR(corpus_bleu(c, c), 1.0, 1e-9);
}

TEST(Bleu, ShortCandidate) {
  const double got = corpus_bleu({toks("the cat sat")}, {toks("the cat sat down")});
  EXPECT_NEAR(got, reference_bleu({toks("the cat sat")}, {toks("the cat sat down")}), 1e-12);
  EXPECT_NEAR(got, 0.6025, 1e-4);
}

TEST(Bleu, DisjointIsSmallButPositive) {
  const double got = corpus_bleu({toks("a b c d")}, {toks("e f g h")});
  EXPECT_GT(got, 0.0);
  EXPECT_LT(got, 0.1);
}

TEST(Bleu, MatchesReferenceOnRandomCorpora) {
  std::mt19937_64 rng(53);
  for (int n = 0; n < 300; ++n) {
    std::vector<TokenSeq> c, r;
    const std::size_t size = 1 + rng() % 5;
    for (std::size_t i = 0; i < size; ++i) {
      c.push_back(gen::random_tokens(rng, rng() % 9, 4));
      r.push_back(gen::random_tokens(rng, 1 + rng() % 9, 4));
    }
    EXPECT_NEAR(corpus_bleu(c, r), reference_bleu(c, r), 1e-12);
  }
}

TEST(Bleu, Errors) {
  EXPECT_THROW(corpus_bleu({}, {}), ValidationError);
  EXPECT_THROW(corpus_bleu({toks("a")}, {}), ValidationError);
}

TEST(DiffDistinct, HandExample) {
  EXPECT_NEAR(diff_distinct(pair("a b", "a b a c")), 0.75, 1e-12);
}

TEST(DiffDistinct, Extremes) {
  EXPECT_DOUBLE_EQ(diff_distinct(pair("a b", "x y a b z")), 1.0);
  EXPECT_DOUBLE_EQ(diff_distinct(pair("a b c", "a b c a b")), 0.0);
  EXPECT_DOUBLE_EQ(diff_distinct(pair("a b", "a b")), 0.0);
}

TEST(DiffDistinct, NoCrossSpanNgrams) {
  // "x" and "y" are separate spans, so the bigram "x y" never forms.
  const auto p = pair("a", "x a y");
  EXPECT_DOUBLE_EQ(diff_distinct(p), 1.0);
}

TEST(DiffDistinct, BoundedOnRandomPairs) {
  std::mt19937_64 rng(59);
  for (int i = 0; i < 500; ++i) {
    const double d = diff_distinct(gen::random_pair(rng, 12, 3));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}

TEST(InfoGainTemplates, InformativeExpansion) {
  const auto t = infill_templates_for_infogain(fixtures::informative_pair());
  EXPECT_EQ(t.infill.input.render("<M{i}>"),
            toks("besides tennis , <M1> personal <M2> of all time <M3> , and i 'm a huge fan ."));
  EXPECT_EQ(t.infill.target.render("<M{i}>"), toks("<M1> my <M2> favorite sport <M3> is basketball <M4>"));
  EXPECT_EQ(t.inherent.input.render("<M{i}>"), toks("<M1>"));
  EXPECT_EQ(t.inherent.target.render("<M{i}>"), toks("my favorite sport is basketball"));
}

TEST(InfoGainTemplates, LeadingModifier) {
  const auto t = infill_templates_for_infogain(pair("a b", "x a b"));
  EXPECT_EQ(t.infill.input.render("<M{i}>"), toks("x <M1>"));
}

TEST(InfoGainTemplates, SpliceRoundTrip) {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 300; ++i) {
    const auto p = gen::random_pair(rng, 12, 4);
    if (p.modifier_spans.empty()) {
      EXPECT_THROW(infill_templates_for_infogain(p), ValidationError);
      continue;
    }
    const auto t = infill_templates_for_infogain(p);
    EXPECT_EQ(reconstruct(t.infill), p.expansion);
    EXPECT_EQ(reconstruct(t.inherent), p.source);
  }
}

TEST(InfoGain, EqualOracleGivesDiffDistinct) {
  const auto infill = ScorerHandle::external(ScorerKind::infill, equal_stub());
  for (const auto& p : {fixtures::informative_pair(), fixtures::table1_pair(), pair("a b", "a b a c")}) {
    EXPECT_NEAR(info_gain(p, infill), diff_distinct(p), 1e-9);
  }
  EXPECT_EQ(info_gain(pair("a b", "a b"), infill), 0.0);
}

TEST(InfoGain, MemorizingOracleRatioAboveOne) {
  const auto y = fixtures::informative_pair().expansion;
  auto model = std::make_shared<lm::NgramModel>(lm::train({y}, 3, 0.01));
  const auto infill = ScorerHandle::builtin_infill(model);
  const auto t = infill_templates_for_infogain(fixtures::informative_pair());
  const double infill_ppl = infill.score_infill(t.infill, kDefaultMaskFormat).perplexity();
  const double inherent_ppl = infill.score_infill(t.inherent, kDefaultMaskFormat).perplexity();
  EXPECT_LT(infill_ppl, inherent_ppl);
}

TEST(ScorePpl, UniformAndSeenSentence) {
  auto uniform = std::make_shared<lm::NgramModel>(lm::uniform_model({"a", "b", "c", "d"}));
  EXPECT_NEAR(score_ppl(toks("a b c"), ScorerHandle::builtin_lm(uniform)), 6.0, 1e-6);
  const auto s = toks("the quick brown fox jumps");
  auto trained = std::make_shared<lm::NgramModel>(lm::train({s, toks("a lazy dog sleeps")}, 3, 0.01));
  const auto lm = ScorerHandle::builtin_lm(trained);
  EXPECT_LE(score_ppl(s, lm), score_ppl(toks("fox the jumps brown quick"), lm));
  EXPECT_THROW(score_ppl({}, lm), ValidationError);
}

TEST(ScoreNli, Overlap) {
  const auto nli = ScorerHandle::builtin_overlap(default_stopwords(Language::en));
  EXPECT_DOUBLE_EQ(score_nli(toks("my absolute favorite sport is basketball"), toks("favorite sport basketball"), nli),
                   1.0);
  EXPECT_DOUBLE_EQ(score_nli(toks("cats sleep"), toks("dogs bark"), nli), 0.0);
}

TEST(EvaluateCorpus, SelfIsPerfect) {
  const std::vector<ExpansionPair> ref = {fixtures::table1_pair(), fixtures::informative_pair()};
  const auto report = evaluate_corpus(ref, ref, {});
  EXPECT_DOUBLE_EQ(report.corpus.fidelity_rate, 1.0);
  EXPECT_NEAR(report.corpus.bleu, 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(*report.corpus.mean_n_pos, 4.0);
  EXPECT_FALSE(report.corpus.mean_ppl.has_value());
}

TEST(EvaluateCorpus, HalfFaithful) {
  std::vector<ExpansionPair> ref = {pair("a b", "a x b"), pair("c d", "c y d")};
  ref[1].id = "q";
  std::vector<ExpansionPair> sys = ref;
  sys[1] = make_pair("q", Language::en, toks("c d"), toks("d c"), {}, Provenance::MODEL);
  const auto report = evaluate_corpus(sys, ref, {});
  EXPECT_DOUBLE_EQ(report.corpus.fidelity_rate, 0.5);
  EXPECT_FALSE(report.per_pair[1].fidelity);
  EXPECT_FALSE(report.per_pair[1].len.has_value());
  EXPECT_DOUBLE_EQ(*report.corpus.mean_len, 1.0);
}

TEST(EvaluateCorpus, OrphansListed) {
  auto a = pair("a", "a b");
  auto b = a;
  b.id = "other";
  try {
    evaluate_corpus({a}, {b}, {});
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("p"), std::string::npos);
    EXPECT_NE(msg.find("other"), std::string::npos);
  }
}

TEST(EvaluateCorpus, ParallelMatchesSerial) {
  std::mt19937_64 rng(67);
  std::vector<ExpansionPair> ref;
  for (int i = 0; i < 200; ++i) ref.push_back(gen::random_pair(rng, 12, 5, "r" + std::to_string(i)));
  Oracles o;
  o.infill = ScorerHandle::external(ScorerKind::infill, equal_stub());
  o.lm = ScorerHandle::external(ScorerKind::lm, equal_stub());
  const auto serial = evaluate_corpus(ref, ref, o, {std::string(kDefaultMaskFormat), 1});
  const auto parallel = evaluate_corpus(ref, ref, o, {std::string(kDefaultMaskFormat), 8});
  EXPECT_EQ(serial, parallel);
}

TEST(Report, JsonRoundTrip) {
  const std::vector<ExpansionPair> ref = {fixtures::table1_pair()};
  const auto report = evaluate_corpus(ref, ref, {});
  EXPECT_EQ(report_from_json(to_json(report)), report);
}

TEST(Report, RenderMatchesGolden) {
  MetricReport r;
  r.per_pair.resize(2);
  r.corpus.fidelity_rate = 0.5;
  r.corpus.mean_len = 6.5;
  r.corpus.mean_n_pos = 2.0;
  r.corpus.mean_ppl = 41.237;
  r.corpus.mean_nli_e = 0.8125;
  r.corpus.bleu = 0.3325;
  std::ifstream in(std::string(TEST_DATA_DIR) + "/report_table.txt");
  ASSERT_TRUE(in) << "missing golden file";
  std::stringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(render_table(r), golden.str());
}

TEST(Report, EmptyIsError) { EXPECT_THROW(render_table({}), ValidationError); }
