#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "expanse/corpus.hpp"
#include "expanse/scorer.hpp"
#include "expanse/template.hpp"
#include "expanse/text_util.hpp"

namespace expanse::construct {

struct FilterConfig {
  double ppl_threshold = 200.0;
  std::size_t min_source_len = 3;
  std::size_t max_modifier_len = 20;
  std::size_t total_len_min = 3;
  std::size_t total_len_max = 20;
  std::size_t max_consecutive_punct = 3;
  std::vector<std::string> banned_substrings = {"http", "@"};
  std::size_t min_positions = 2;
  double nli_threshold = 0.5;
  // Unset: the shipped list for the pair's language.
  std::optional<StopwordSet> stopwords;

  bool operator==(const FilterConfig&) const = default;
};

void validate(const FilterConfig& cfg);
nlohmann::ordered_json to_json(const FilterConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
FilterConfig filter_config_from_json(const nlohmann::ordered_json& j);

struct FilterVerdict {
  bool keep = true;
  std::vector<int> failed_filters;  // ascending, 1..8
  std::optional<double> ppl_x;
  std::optional<double> ppl_y;
  std::optional<double> nli_e;

  bool operator==(const FilterVerdict&) const = default;
};

nlohmann::ordered_json to_json(const FilterVerdict& verdict);

// The eight discard questions. Filter 7 fires when n_pos < min_positions,
// except for IAR pairs; filter 6 fires when the total modifier length lies
// outside [total_len_min, total_len_max]. Oracle errors propagate.
FilterVerdict apply_filters(const ExpansionPair& pair, const FilterConfig& cfg, const ScorerHandle& lm,
                            const ScorerHandle& nli);

enum class AnchorSide { before, after, both };

std::string_view to_string(AnchorSide side);
AnchorSide parse_anchor_side(std::string_view s);

struct SamplerConfig {
  std::size_t k_min = 3;
  std::size_t k_max = 5;
  std::size_t repeats = 5;
  double anchor_weight = 4.0;
  double base_weight = 1.0;
  std::uint64_t seed = 0;
  // Which neighbour of a slot must carry an anchor tag. Slot i sits between
  // token i-1 and token i; "before" means the slot precedes an anchor token.
  AnchorSide anchor_side = AnchorSide::before;
  std::vector<std::string> anchor_tag_prefixes = {"NN", "VB", "NR", "NT", "VV", "n", "v"};

  bool operator==(const SamplerConfig&) const = default;
};

void validate(const SamplerConfig& cfg);
nlohmann::ordered_json to_json(const SamplerConfig& cfg);
SamplerConfig sampler_config_from_json(const nlohmann::ordered_json& j);

// Weight of each of the |tokens|+1 slots: 0 strictly inside an entity,
// anchor_weight next to an anchor token, base_weight otherwise.
std::vector<double> slot_weights(const TaggedText& text, const SamplerConfig& cfg);

// `repeats` templates. Each draws k in [k_min, k_max], then k distinct slots
// with probability proportional to weight. Input holds the text with the
// slots; target is empty until an infilling model fills it. Throws
// ValidationError("not enough insertable positions") when fewer than k_min
// slots have positive weight.
std::vector<InfillTemplatePair> sample_mmp_templates(const TaggedText& text, const SamplerConfig& cfg);

// Index of the lowest perplexity; the first wins ties.
std::size_t select_best_expansion(const std::vector<TokenSeq>& candidates, const ScorerHandle& lm);

struct PretrainMask {
  InfillTemplatePair templ;
  std::size_t masked_tokens = 0;
  std::size_t hq_spans_masked = 0;
  // Spans in mask order, before merging.
  std::vector<Span> spans;
};

// High-quality modifiers are masked first, in textual order, while they fit in
// ceil(rate·|tokens|); random spans with length drawn from span_len_range
// (clamped to the remaining budget) fill the rest. Masked runs become the
// target of a dual template.
PretrainMask mask_for_pretraining(const TaggedText& text, double rate = 0.25, std::size_t span_len_min = 1,
                                  std::size_t span_len_max = 10, std::uint64_t seed = 0);

}  // namespace expanse::construct
