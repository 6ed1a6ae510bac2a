#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "expanse/corpus.hpp"
#include "expanse/scorer.hpp"
#include "expanse/template.hpp"

namespace expanse::metrics {

struct Fertility {
  std::size_t len = 0;
  std::size_t n_pos = 0;
};

// Requires populated spans.
Fertility metric_len_npos(const ExpansionPair& pair);

// Corpus BLEU-4, one reference per candidate. Zero n-gram matches are
// smoothed exponentially: the k-th zero precision becomes 1 / (2^k · total).
double corpus_bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references);

// Mean over n = 1..4 of the share of distinct modifier n-grams (never
// crossing a span boundary) that do not occur in X. 0 without modifiers.
double diff_distinct(const ExpansionPair& pair);

struct InfoGainTemplates {
  InfillTemplatePair infill;    // modifiers given, X fragments to recover
  InfillTemplatePair inherent;  // X alone behind one slot
};

// Throws ValidationError("no modifiers") for a pair without spans.
InfoGainTemplates infill_templates_for_infogain(const ExpansionPair& pair);

double score_ppl(const TokenSeq& tokens, const ScorerHandle& lm);
double score_nli(const TokenSeq& premise, const TokenSeq& hypothesis, const ScorerHandle& nli);

// (Inherent-PPL / Infill-PPL) · Diff-Distinct; 0 without modifiers.
double info_gain(const ExpansionPair& pair, const ScorerHandle& infill,
                 std::string_view mask_format = kDefaultMaskFormat);

struct PairMetrics {
  std::string id;
  bool fidelity = false;
  std::optional<std::size_t> len;
  std::optional<std::size_t> n_pos;
  std::optional<double> ppl;
  std::optional<double> nli_e;
  std::optional<double> diff_distinct;
  std::optional<double> info_gain;

  bool operator==(const PairMetrics&) const = default;
};

// Means skip pairs where the value is undefined; nullopt when none is.
struct CorpusMetrics {
  double fidelity_rate = 0.0;
  std::optional<double> mean_len;
  std::optional<double> mean_n_pos;
  std::optional<double> mean_ppl;
  std::optional<double> mean_nli_e;
  std::optional<double> mean_info_gain;
  double bleu = 0.0;

  bool operator==(const CorpusMetrics&) const = default;
};

struct MetricReport {
  std::vector<PairMetrics> per_pair;
  CorpusMetrics corpus;

  bool operator==(const MetricReport&) const = default;
};

struct Oracles {
  std::optional<ScorerHandle> lm;
  std::optional<ScorerHandle> nli;
  std::optional<ScorerHandle> infill;
};

struct EvalConfig {
  std::string mask_format = std::string(kDefaultMaskFormat);
  std::size_t jobs = 1;
};

// Pairs system and reference records by id (system order is kept). System
// pairs without spans are aligned first; pairs failing fidelity get no span
// metrics, and pairs with an empty X get no Info-Gain. Throws ValidationError
// listing orphan or duplicate ids.
MetricReport evaluate_corpus(const std::vector<ExpansionPair>& system, const std::vector<ExpansionPair>& reference,
                             const Oracles& oracles, const EvalConfig& config = {});

nlohmann::ordered_json to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::ordered_json& j);

// Corpus row under the columns Len, N-Pos, PPL, Nli-E, Info-Gain, BLEU,
// Fidelity. Throws ValidationError("empty report") without pairs.
std::string render_table(const MetricReport& report);

}  // namespace expanse::metrics
