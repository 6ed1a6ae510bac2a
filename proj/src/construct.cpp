#include "expanse/construct.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "expanse/error.hpp"
#include "expanse/metrics.hpp"
#include "expanse/rng.hpp"

namespace expanse::construct {

namespace {

bool has_prefix(const std::string& tag, const std::vector<std::string>& prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return tag.rfind(p, 0) == 0; });
}

template <typename T>
void read_opt(const nlohmann::ordered_json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

void reject_unknown(const nlohmann::ordered_json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ValidationError(std::string(what) + ": unknown key \"" + key + "\"");
    }
  }
}

}  // namespace

void validate(const FilterConfig& cfg) {
  if (!(cfg.ppl_threshold > 0.0)) throw ValidationError("filter config: ppl_threshold must be positive");
  if (cfg.total_len_min > cfg.total_len_max) throw ValidationError("filter config: total_len_range min > max");
  if (!(cfg.nli_threshold >= 0.0 && cfg.nli_threshold <= 1.0)) {
    throw ValidationError("filter config: nli_threshold must lie in [0,1]");
  }
}

nlohmann::ordered_json to_json(const FilterConfig& cfg) {
  nlohmann::ordered_json j;
  j["ppl_threshold"] = cfg.ppl_threshold;
  j["min_source_len"] = cfg.min_source_len;
  j["max_modifier_len"] = cfg.max_modifier_len;
  j["total_len_range"] = {cfg.total_len_min, cfg.total_len_max};
  j["max_consecutive_punct"] = cfg.max_consecutive_punct;
  j["banned_substrings"] = cfg.banned_substrings;
  j["min_positions"] = cfg.min_positions;
  j["nli_threshold"] = cfg.nli_threshold;
  if (cfg.stopwords) j["stopwords"] = *cfg.stopwords;
  return j;
}

FilterConfig filter_config_from_json(const nlohmann::ordered_json& j) {
  reject_unknown(j,
                 {"ppl_threshold", "min_source_len", "max_modifier_len", "total_len_range", "max_consecutive_punct",
                  "banned_substrings", "min_positions", "nli_threshold", "stopwords"},
                 "filter config");
  FilterConfig cfg;
  try {
    read_opt(j, "ppl_threshold", cfg.ppl_threshold);
    read_opt(j, "min_source_len", cfg.min_source_len);
    read_opt(j, "max_modifier_len", cfg.max_modifier_len);
    if (auto it = j.find("total_len_range"); it != j.end()) {
      if (!it->is_array() || it->size() != 2) throw ValidationError("filter config: total_len_range must be [min, max]");
      cfg.total_len_min = it->at(0).get<std::size_t>();
      cfg.total_len_max = it->at(1).get<std::size_t>();
    }
    read_opt(j, "max_consecutive_punct", cfg.max_consecutive_punct);
    read_opt(j, "banned_substrings", cfg.banned_substrings);
    read_opt(j, "min_positions", cfg.min_positions);
    read_opt(j, "nli_threshold", cfg.nli_threshold);
    if (auto it = j.find("stopwords"); it != j.end()) cfg.stopwords = it->get<StopwordSet>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("filter config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

nlohmann::ordered_json to_json(const FilterVerdict& v) {
  nlohmann::ordered_json j;
  j["keep"] = v.keep;
  j["failed_filters"] = v.failed_filters;
  if (v.ppl_x) j["ppl_x"] = *v.ppl_x;
  if (v.ppl_y) j["ppl_y"] = *v.ppl_y;
  if (v.nli_e) j["nli_e"] = *v.nli_e;
  return j;
}

FilterVerdict apply_filters(const ExpansionPair& pair, const FilterConfig& cfg, const ScorerHandle& lm,
                            const ScorerHandle& nli) {
  if (!pair.spans_populated()) throw ValidationError("pair " + pair.id + ": modifier_spans not populated");
  const StopwordSet stopwords = cfg.stopwords ? *cfg.stopwords : default_stopwords(pair.language);
  const auto mods = surface_modifiers(pair);
  std::set<int> failed;

  FilterVerdict v;
  if (!pair.source.empty()) v.ppl_x = metrics::score_ppl(pair.source, lm);
  if (!pair.expansion.empty()) v.ppl_y = metrics::score_ppl(pair.expansion, lm);
  if ((v.ppl_x && *v.ppl_x > cfg.ppl_threshold) || (v.ppl_y && *v.ppl_y > cfg.ppl_threshold)) failed.insert(1);

  std::size_t total = 0;
  for (const auto& m : mods) {
    total += m.size();
    if (std::none_of(m.begin(), m.end(), [&](const std::string& t) { return is_content_token(t, stopwords); })) {
      failed.insert(2);
    }
    if (m.size() > cfg.max_modifier_len) failed.insert(4);
    const std::string text = join(m);
    const bool banned = std::any_of(cfg.banned_substrings.begin(), cfg.banned_substrings.end(),
                                    [&](const std::string& b) { return !b.empty() && text.find(b) != std::string::npos; });
    if (banned || max_punct_run(m) > cfg.max_consecutive_punct) failed.insert(5);
  }
  if (pair.source.size() < cfg.min_source_len) failed.insert(3);
  if (total < cfg.total_len_min || total > cfg.total_len_max) failed.insert(6);
  if (pair.provenance != Provenance::IAR && mods.size() < cfg.min_positions) failed.insert(7);

  v.nli_e = metrics::score_nli(pair.expansion, pair.source, nli);
  if (*v.nli_e < cfg.nli_threshold) failed.insert(8);

  v.failed_filters.assign(failed.begin(), failed.end());
  v.keep = v.failed_filters.empty();
  return v;
}

std::string_view to_string(AnchorSide side) {
  switch (side) {
    case AnchorSide::before: return "before";
    case AnchorSide::after: return "after";
    case AnchorSide::both: break;
  }
  return "both";
}

AnchorSide parse_anchor_side(std::string_view s) {
  if (s == "before") return AnchorSide::before;
  if (s == "after") return AnchorSide::after;
  if (s == "both") return AnchorSide::both;
  throw ValidationError("anchor_side must be before, after or both, got \"" + std::string(s) + "\"");
}

void validate(const SamplerConfig& cfg) {
  if (cfg.k_min < 1 || cfg.k_min > cfg.k_max) throw ValidationError("sampler config: need 1 <= k_min <= k_max");
  if (cfg.repeats < 1) throw ValidationError("sampler config: repeats must be >= 1");
  if (!(cfg.anchor_weight > 0.0) || !(cfg.base_weight > 0.0)) {
    throw ValidationError("sampler config: weights must be positive");
  }
}

nlohmann::ordered_json to_json(const SamplerConfig& cfg) {
  nlohmann::ordered_json j;
  j["k_min"] = cfg.k_min;
  j["k_max"] = cfg.k_max;
  j["repeats"] = cfg.repeats;
  j["anchor_weight"] = cfg.anchor_weight;
  j["base_weight"] = cfg.base_weight;
  j["seed"] = cfg.seed;
  j["anchor_side"] = to_string(cfg.anchor_side);
  j["anchor_tag_prefixes"] = cfg.anchor_tag_prefixes;
  return j;
}

SamplerConfig sampler_config_from_json(const nlohmann::ordered_json& j) {
  reject_unknown(j,
                 {"k_min", "k_max", "repeats", "anchor_weight", "base_weight", "seed", "anchor_side",
                  "anchor_tag_prefixes"},
                 "sampler config");
  SamplerConfig cfg;
  try {
    read_opt(j, "k_min", cfg.k_min);
    read_opt(j, "k_max", cfg.k_max);
    read_opt(j, "repeats", cfg.repeats);
    read_opt(j, "anchor_weight", cfg.anchor_weight);
    read_opt(j, "base_weight", cfg.base_weight);
    read_opt(j, "seed", cfg.seed);
    if (auto it = j.find("anchor_side"); it != j.end()) cfg.anchor_side = parse_anchor_side(it->get<std::string>());
    read_opt(j, "anchor_tag_prefixes", cfg.anchor_tag_prefixes);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("sampler config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::vector<double> slot_weights(const TaggedText& text, const SamplerConfig& cfg) {
  if (!text.pos) throw ValidationError("pos required for anchor weights");
  const auto& tags = *text.pos;
  const std::size_t n = text.tokens.size();
  std::vector<double> w(n + 1, cfg.base_weight);
  for (std::size_t i = 0; i <= n; ++i) {
    const bool before = i < n && has_prefix(tags[i], cfg.anchor_tag_prefixes);
    const bool after = i > 0 && has_prefix(tags[i - 1], cfg.anchor_tag_prefixes);
    bool anchor = false;
    switch (cfg.anchor_side) {
      case AnchorSide::before: anchor = before; break;
      case AnchorSide::after: anchor = after; break;
      case AnchorSide::both: anchor = before || after; break;
    }
    if (anchor) w[i] = cfg.anchor_weight;
  }
  if (text.entities) {
    for (const auto& e : *text.entities) {
      for (std::size_t i = e.start + 1; i < e.end; ++i) w[i] = 0.0;
    }
  }
  return w;
}

std::vector<InfillTemplatePair> sample_mmp_templates(const TaggedText& text, const SamplerConfig& cfg) {
  validate(cfg);
  const auto weights = slot_weights(text, cfg);
  const auto insertable = static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
  if (insertable < cfg.k_min) throw ValidationError("not enough insertable positions");

  Rng rng(cfg.seed, text.id);
  std::vector<InfillTemplatePair> out;
  out.reserve(cfg.repeats);
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::size_t k = std::min<std::size_t>(rng.between(cfg.k_min, cfg.k_max), insertable);
    auto w = weights;
    std::vector<bool> chosen(w.size(), false);
    for (std::size_t pick = 0; pick < k; ++pick) {
      double total = 0.0;
      for (double x : w) total += x;
      double target = rng.unit() * total;
      std::size_t slot = w.size();
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        slot = i;
        if (target < w[i]) break;
        target -= w[i];
      }
      chosen[slot] = true;
      w[slot] = 0.0;
    }
    InfillTemplatePair t;
    std::size_t index = 0;
    for (std::size_t i = 0; i <= text.tokens.size(); ++i) {
      if (chosen[i]) t.input.segments.emplace_back(Slot{++index});
      if (i == text.tokens.size()) break;
      if (t.input.segments.empty() || !std::holds_alternative<Literal>(t.input.segments.back())) {
        t.input.segments.emplace_back(Literal{});
      }
      std::get<Literal>(t.input.segments.back()).tokens.push_back(text.tokens[i]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::size_t select_best_expansion(const std::vector<TokenSeq>& candidates, const ScorerHandle& lm) {
  if (candidates.empty()) throw ValidationError("no candidates");
  std::size_t best = 0;
  double best_ppl = metrics::score_ppl(candidates[0], lm);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double p = metrics::score_ppl(candidates[i], lm);
    if (p < best_ppl) {
      best = i;
      best_ppl = p;
    }
  }
  return best;
}

PretrainMask mask_for_pretraining(const TaggedText& text, double rate, std::size_t span_len_min,
                                  std::size_t span_len_max, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("mask rate must lie in [0,1]");
  if (span_len_min < 1 || span_len_min > span_len_max) throw ValidationError("need 1 <= span_len_min <= span_len_max");
  const std::size_t n = text.tokens.size();
  if (n == 0) throw ValidationError("empty input");
  const auto budget = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n)));
  std::vector<bool> masked(n, false);
  PretrainMask out;
  const auto free_run = [&](std::size_t s, std::size_t len) {
    for (std::size_t i = s; i < s + len; ++i) {
      if (masked[i]) return false;
    }
    return true;
  };
  const auto mask = [&](Span s) {
    for (std::size_t i = s.start; i < s.end; ++i) masked[i] = true;
    out.masked_tokens += s.length();
    out.spans.push_back(s);
  };

  if (text.hq_modifiers) {
    auto hq = *text.hq_modifiers;
    std::sort(hq.begin(), hq.end());
    for (const auto& s : hq) {
      if (out.masked_tokens + s.length() <= budget && free_run(s.start, s.length())) {
        mask(s);
        ++out.hq_spans_masked;
      }
    }
  }

  Rng rng(seed, text.id);
  while (out.masked_tokens < budget) {
    std::size_t len = std::min<std::size_t>(rng.between(span_len_min, span_len_max), budget - out.masked_tokens);
    std::vector<std::size_t> starts;
    for (; len >= 1; --len) {
      for (std::size_t s = 0; s + len <= n; ++s) {
        if (free_run(s, len)) starts.push_back(s);
      }
      if (!starts.empty()) break;
    }
    if (starts.empty()) break;
    const std::size_t start = starts[rng.below(starts.size())];
    mask({start, start + len});
  }

  std::vector<LabeledRun> runs;
  for (std::size_t i = 0; i < n; ++i) {
    if (runs.empty() || runs.back().in_input == masked[i]) runs.push_back({{}, !masked[i]});
    runs.back().tokens.push_back(text.tokens[i]);
  }
  out.templ = make_dual(runs);
  return out;
}

}  // namespace expanse::construct
