#include "expanse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "expanse/align.hpp"
#include "expanse/error.hpp"
#include "expanse/parallel.hpp"

namespace expanse::metrics {

namespace {

constexpr std::size_t kMaxOrder = 4;

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const TokenSeq& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++out[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

void require_spans(const ExpansionPair& pair) {
  if (!pair.spans_populated()) throw ValidationError("pair " + pair.id + ": modifier_spans not populated");
}

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

template <typename T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const nlohmann::ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

}  // namespace

Fertility metric_len_npos(const ExpansionPair& pair) {
  require_spans(pair);
  Fertility f;
  for (const auto& s : pair.modifier_spans) f.len += s.length();
  f.n_pos = pair.modifier_spans.size();
  return f;
}

double corpus_bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references) {
  if (candidates.empty()) throw ValidationError("bleu: empty corpus");
  if (candidates.size() != references.size()) {
    throw ValidationError("bleu: " + std::to_string(candidates.size()) + " candidates but " +
                          std::to_string(references.size()) + " references");
  }
  std::size_t matches[kMaxOrder] = {};
  std::size_t totals[kMaxOrder] = {};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const auto ref = ngram_counts(references[i], n);
      for (const auto& [g, c] : ngram_counts(candidates[i], n)) {
        auto it = ref.find(g);
        matches[n - 1] += it == ref.end() ? 0 : std::min(c, it->second);
        totals[n - 1] += c;
      }
    }
  }
  if (cand_len == 0) return 0.0;
  double log_sum = 0.0;
  double smooth = 1.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    const double total = static_cast<double>(std::max<std::size_t>(totals[n], 1));
    double p;
    if (matches[n] == 0) {
      smooth *= 2.0;
      p = 1.0 / (smooth * total);
    } else {
      p = static_cast<double>(matches[n]) / total;
    }
    log_sum += std::log(p);
  }
  const double ratio = static_cast<double>(ref_len) / static_cast<double>(cand_len);
  const double bp = std::exp(std::min(0.0, 1.0 - ratio));
  return bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

double diff_distinct(const ExpansionPair& pair) {
  require_spans(pair);
  const auto mods = surface_modifiers(pair);
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    std::set<Ngram> grams;
    for (const auto& m : mods) {
      for (const auto& [g, c] : ngram_counts(m, n)) grams.insert(g);
    }
    if (grams.empty()) continue;
    const auto in_x = ngram_counts(pair.source, n);
    std::size_t novel = 0;
    for (const auto& g : grams) novel += in_x.count(g) == 0;
    sum += static_cast<double>(novel) / static_cast<double>(grams.size());
    ++defined;
  }
  return defined == 0 ? 0.0 : sum / static_cast<double>(defined);
}

InfoGainTemplates infill_templates_for_infogain(const ExpansionPair& pair) {
  require_spans(pair);
  if (pair.modifier_spans.empty()) throw ValidationError("no modifiers");
  std::vector<LabeledRun> runs;
  std::size_t pos = 0;
  const auto& y = pair.expansion;
  for (const auto& s : pair.modifier_spans) {
    if (pos < s.start) runs.push_back({TokenSeq(y.begin() + pos, y.begin() + s.start), false});
    runs.push_back({TokenSeq(y.begin() + s.start, y.begin() + s.end), true});
    pos = s.end;
  }
  if (pos < y.size()) runs.push_back({TokenSeq(y.begin() + pos, y.end()), false});
  InfoGainTemplates out;
  out.infill = make_dual(runs);
  out.inherent = make_dual({{pair.source, false}});
  return out;
}

double score_ppl(const TokenSeq& tokens, const ScorerHandle& lm) { return lm.score_lm(tokens).perplexity(); }

double score_nli(const TokenSeq& premise, const TokenSeq& hypothesis, const ScorerHandle& nli) {
  return nli.score_nli(premise, hypothesis);
}

double info_gain(const ExpansionPair& pair, const ScorerHandle& infill, std::string_view mask_format) {
  require_spans(pair);
  if (pair.modifier_spans.empty()) return 0.0;
  const auto t = infill_templates_for_infogain(pair);
  const double infill_ppl = infill.score_infill(t.infill, mask_format).perplexity();
  const double inherent_ppl = infill.score_infill(t.inherent, mask_format).perplexity();
  return inherent_ppl / infill_ppl * diff_distinct(pair);
}

MetricReport evaluate_corpus(const std::vector<ExpansionPair>& system, const std::vector<ExpansionPair>& reference,
                             const Oracles& oracles, const EvalConfig& config) {
  check_mask_format(config.mask_format);
  std::map<std::string, std::size_t> ref_index;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!ref_index.emplace(reference[i].id, i).second) problems.push_back("duplicate reference id " + reference[i].id);
  }
  std::set<std::string> seen;
  std::vector<std::size_t> ref_of(system.size());
  for (std::size_t i = 0; i < system.size(); ++i) {
    const auto& id = system[i].id;
    if (!seen.insert(id).second) problems.push_back("duplicate system id " + id);
    auto it = ref_index.find(id);
    if (it == ref_index.end()) {
      problems.push_back("system id " + id + " has no reference");
    } else {
      ref_of[i] = it->second;
    }
  }
  for (const auto& r : reference) {
    if (!seen.count(r.id)) problems.push_back("reference id " + r.id + " has no system output");
  }
  if (!problems.empty()) {
    std::string msg = "id mismatch:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  if (system.empty()) throw ValidationError("empty corpus");

  MetricReport report;
  report.per_pair.resize(system.size());
  parallel_for(system.size(), config.jobs, [&](std::size_t i) {
    const auto& sys = system[i];
    PairMetrics m;
    m.id = sys.id;
    m.fidelity = align::check_fidelity(sys.source, sys.expansion);
    if (oracles.lm) m.ppl = score_ppl(sys.expansion, *oracles.lm);
    if (oracles.nli) m.nli_e = score_nli(sys.expansion, sys.source, *oracles.nli);
    if (m.fidelity) {
      const auto pair = align::canonicalize(sys);
      const auto f = metric_len_npos(pair);
      m.len = f.len;
      m.n_pos = f.n_pos;
      m.diff_distinct = diff_distinct(pair);
      if (oracles.infill && !pair.source.empty()) m.info_gain = info_gain(pair, *oracles.infill, config.mask_format);
    }
    report.per_pair[i] = std::move(m);
  });

  std::vector<double> lens, npos, ppls, nlis, gains;
  std::size_t faithful = 0;
  for (const auto& m : report.per_pair) {
    faithful += m.fidelity;
    if (m.len) lens.push_back(static_cast<double>(*m.len));
    if (m.n_pos) npos.push_back(static_cast<double>(*m.n_pos));
    if (m.ppl) ppls.push_back(*m.ppl);
    if (m.nli_e) nlis.push_back(*m.nli_e);
    if (m.info_gain) gains.push_back(*m.info_gain);
  }
  auto& c = report.corpus;
  c.fidelity_rate = static_cast<double>(faithful) / static_cast<double>(system.size());
  c.mean_len = mean_of(lens);
  c.mean_n_pos = mean_of(npos);
  c.mean_ppl = mean_of(ppls);
  c.mean_nli_e = mean_of(nlis);
  c.mean_info_gain = mean_of(gains);
  std::vector<TokenSeq> cands, refs;
  for (std::size_t i = 0; i < system.size(); ++i) {
    cands.push_back(system[i].expansion);
    refs.push_back(reference[ref_of[i]].expansion);
  }
  c.bleu = corpus_bleu(cands, refs);
  return report;
}

nlohmann::ordered_json to_json(const MetricReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& m : report.per_pair) {
    nlohmann::ordered_json r;
    r["id"] = m.id;
    r["fidelity"] = m.fidelity;
    r["len"] = opt_json(m.len);
    r["n_pos"] = opt_json(m.n_pos);
    r["ppl"] = opt_json(m.ppl);
    r["nli_e"] = opt_json(m.nli_e);
    r["diff_distinct"] = opt_json(m.diff_distinct);
    r["info_gain"] = opt_json(m.info_gain);
    rows.push_back(std::move(r));
  }
  const auto& c = report.corpus;
  nlohmann::ordered_json corpus;
  corpus["fidelity_rate"] = c.fidelity_rate;
  corpus["mean_len"] = opt_json(c.mean_len);
  corpus["mean_n_pos"] = opt_json(c.mean_n_pos);
  corpus["mean_ppl"] = opt_json(c.mean_ppl);
  corpus["mean_nli_e"] = opt_json(c.mean_nli_e);
  corpus["mean_info_gain"] = opt_json(c.mean_info_gain);
  corpus["bleu"] = c.bleu;
  nlohmann::ordered_json j;
  j["per_pair"] = std::move(rows);
  j["corpus"] = std::move(corpus);
  return j;
}

MetricReport report_from_json(const nlohmann::ordered_json& j) {
  MetricReport report;
  try {
    for (const auto& r : j.at("per_pair")) {
      PairMetrics m;
      m.id = r.at("id").get<std::string>();
      m.fidelity = r.at("fidelity").get<bool>();
      m.len = opt_from<std::size_t>(r, "len");
      m.n_pos = opt_from<std::size_t>(r, "n_pos");
      m.ppl = opt_from<double>(r, "ppl");
      m.nli_e = opt_from<double>(r, "nli_e");
      m.diff_distinct = opt_from<double>(r, "diff_distinct");
      m.info_gain = opt_from<double>(r, "info_gain");
      report.per_pair.push_back(std::move(m));
    }
    const auto& c = j.at("corpus");
    report.corpus.fidelity_rate = c.at("fidelity_rate").get<double>();
    report.corpus.mean_len = opt_from<double>(c, "mean_len");
    report.corpus.mean_n_pos = opt_from<double>(c, "mean_n_pos");
    report.corpus.mean_ppl = opt_from<double>(c, "mean_ppl");
    report.corpus.mean_nli_e = opt_from<double>(c, "mean_nli_e");
    report.corpus.mean_info_gain = opt_from<double>(c, "mean_info_gain");
    report.corpus.bleu = c.at("bleu").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
  return report;
}

std::string render_table(const MetricReport& report) {
  if (report.per_pair.empty()) throw ValidationError("empty report");
  const auto cell = [](std::optional<double> v, const char* fmt) {
    if (!v) return std::string("-");
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return std::string(buf);
  };
  const auto& c = report.corpus;
  const std::vector<std::pair<std::string, std::string>> cols = {
      {"Len", cell(c.mean_len, "%.2f")},
      {"N-Pos", cell(c.mean_n_pos, "%.2f")},
      {"PPL", cell(c.mean_ppl, "%.2f")},
      {"Nli-E", cell(c.mean_nli_e, "%.4f")},
      {"Info-Gain", cell(c.mean_info_gain, "%.4f")},
      {"BLEU", cell(c.bleu * 100.0, "%.2f")},
      {"Fidelity", cell(c.fidelity_rate * 100.0, "%.2f")},
  };
  std::ostringstream head, rule, row;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& [name, value] = cols[k];
    const std::size_t w = std::max(name.size(), value.size());
    const char* sep = k == 0 ? "" : "  ";
    head << sep << std::string(w - name.size(), ' ') << name;
    rule << sep << std::string(w, '-');
    row << sep << std::string(w - value.size(), ' ') << value;
  }
  std::ostringstream out;
  out << head.str() << '\n' << rule.str() << '\n' << row.str() << '\n';
  out << "pairs: " << report.per_pair.size() << '\n';
  return out.str();
}

}  // namespace expanse::metrics
