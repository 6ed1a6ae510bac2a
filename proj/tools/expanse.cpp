// expanse: text-expansion corpus construction and evaluation.

#include <openssl/evp.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "expanse/align.hpp"
#include "expanse/construct.hpp"
#include "expanse/corpus.hpp"
#include "expanse/error.hpp"
#include "expanse/hearst.hpp"
#include "expanse/metrics.hpp"
#include "expanse/ngram_lm.hpp"
#include "expanse/parallel.hpp"
#include "expanse/scorer.hpp"
#include "expanse/treebank.hpp"

#ifndef EXPANSE_VERSION
#define EXPANSE_VERSION "0.0.0"
#endif

namespace {

using namespace expanse;
using json = nlohmann::ordered_json;

constexpr const char* kStdio = "-";

struct PipelineConfig {
  Language language = Language::en;
  std::string mask_format = std::string(kDefaultMaskFormat);
  std::string null_token = std::string(kDefaultNullToken);
  std::uint64_t seed = 0;
  construct::FilterConfig filter;
  construct::SamplerConfig sampler;
  std::string lm_oracle = "builtin";
  std::string nli_oracle = "builtin";
  std::string infill_oracle = "builtin";
};

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("pipeline config is not valid JSON: ") + e.what(), 1);
  }
  PipelineConfig pc;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "language") {
        pc.language = parse_language(value.get<std::string>());
      } else if (key == "mask_format") {
        pc.mask_format = value.get<std::string>();
      } else if (key == "null_token") {
        pc.null_token = value.get<std::string>();
      } else if (key == "seed") {
        pc.seed = value.get<std::uint64_t>();
      } else if (key == "filter") {
        pc.filter = construct::filter_config_from_json(value);
      } else if (key == "sampler") {
        pc.sampler = construct::sampler_config_from_json(value);
      } else if (key == "oracles") {
        pc.lm_oracle = value.value("lm", pc.lm_oracle);
        pc.nli_oracle = value.value("nli", pc.nli_oracle);
        pc.infill_oracle = value.value("infill", pc.infill_oracle);
      } else {
        throw ValidationError("pipeline config: unknown key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }
  check_mask_format(pc.mask_format);
  return pc;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

class Input {
 public:
  explicit Input(const std::string& path) : path_(path) {
    if (path != kStdio) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot open " + path);
    }
  }
  std::istream& stream() { return path_ == kStdio ? std::cin : file_; }

 private:
  std::string path_;
  std::ifstream file_;
};

class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path != kStdio) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return path_ == kStdio ? std::cout : file_; }
  void finish() {
    stream().flush();
    if (!stream()) throw Error("write failed on " + path_);
  }

 private:
  std::string path_;
  std::ofstream file_;
};

void guard_paths(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  namespace fs = std::filesystem;
  for (const auto& o : outputs) {
    if (o.empty() || o == kStdio) continue;
    for (const auto& i : inputs) {
      if (i.empty() || i == kStdio) continue;
      std::error_code ec;
      if (fs::exists(o) && fs::equivalent(o, i, ec)) throw ValidationError("output " + o + " would overwrite input");
    }
  }
}

struct RunStats {
  std::size_t records_in = 0;
  std::size_t records_out = 0;
  std::size_t records_rejected = 0;
};

void write_manifest(const std::string& output, const std::string& subcommand, const json& config,
                    std::uint64_t seed, const RunStats& stats, const std::vector<std::string>& inputs) {
  if (output.empty() || output == kStdio) return;
  json m;
  m["tool_version"] = EXPANSE_VERSION;
  m["subcommand"] = subcommand;
  m["config_sha256"] = sha256_hex(config.dump());
  m["seed"] = seed;
  m["records_in"] = stats.records_in;
  m["records_out"] = stats.records_out;
  m["records_rejected"] = stats.records_rejected;
  m["inputs"] = inputs;
  m["config"] = config;
  std::ofstream out(output + ".manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest for " + output);
  out << m.dump(2) << '\n';
}

void report_counts(const std::string& subcommand, const RunStats& stats) {
  std::cerr << "expanse " << subcommand << ": " << stats.records_in << " in, " << stats.records_out << " out, "
            << stats.records_rejected << " rejected\n";
}

std::vector<TokenSeq> read_corpus(std::istream& in) {
  std::vector<TokenSeq> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '{') {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("corpus line is not valid JSON: ") + e.what(), out.size() + 1);
      }
      if (j.contains("expansion")) {
        out.push_back(j.at("expansion").get<TokenSeq>());
      } else {
        out.push_back(j.at("tokens").get<TokenSeq>());
      }
    } else {
      out.push_back(split_ws(line));
    }
  }
  return out;
}

// Builds oracle handles; external endpoints with the same command share one
// client.
class OracleFactory {
 public:
  OracleFactory(std::string lm_model, Language language) : lm_model_(std::move(lm_model)), language_(language) {}

  std::optional<ScorerHandle> make(ScorerKind kind, const std::string& spec,
                                   const std::function<std::vector<TokenSeq>()>& fallback_corpus) {
    if (spec == "none") return std::nullopt;
    if (spec != "builtin") {
      auto& client = clients_[spec];
      if (!client) client = open_external(spec);
      return ScorerHandle::external(kind, client);
    }
    switch (kind) {
      case ScorerKind::nli: return ScorerHandle::builtin_overlap(default_stopwords(language_));
      case ScorerKind::lm: return ScorerHandle::builtin_lm(model(fallback_corpus));
      case ScorerKind::infill: break;
    }
    return ScorerHandle::builtin_infill(model(fallback_corpus));
  }

 private:
  std::shared_ptr<const lm::NgramModel> model(const std::function<std::vector<TokenSeq>()>& fallback_corpus) {
    if (!model_) {
      if (!lm_model_.empty()) {
        model_ = std::make_shared<const lm::NgramModel>(lm::load(std::filesystem::path(lm_model_)));
      } else {
        model_ = std::make_shared<const lm::NgramModel>(lm::train(fallback_corpus(), 3, 0.01));
      }
    }
    return model_;
  }

  std::string lm_model_;
  Language language_;
  std::shared_ptr<const lm::NgramModel> model_;
  std::map<std::string, std::shared_ptr<ExternalClient>> clients_;
};

struct Common {
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::string pipeline_config;
  CLI::Option* seed_opt = nullptr;
  PipelineConfig pc;

  std::uint64_t effective_seed() const { return seed_opt && seed_opt->count() ? seed : pc.seed; }
};

// Per-record results gathered in input order.
template <typename In, typename Out>
std::vector<Out> map_records(const std::vector<In>& records, std::size_t jobs,
                             const std::function<Out(const In&, std::size_t)>& fn) {
  std::vector<Out> out(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) { out[i] = fn(records[i], i); });
  return out;
}

struct Emitted {
  std::vector<std::string> lines;
  std::optional<std::string> reject;
};

void write_emitted(const std::vector<Emitted>& results, std::ostream& out, std::ostream* rejects, RunStats& stats) {
  for (const auto& r : results) {
    for (const auto& l : r.lines) out << l << '\n';
    stats.records_out += r.lines.size();
    if (r.reject) {
      ++stats.records_rejected;
      if (rejects) *rejects << *r.reject << '\n';
    }
  }
}

json reject_line(const std::string& id, const std::string& reason) {
  json j;
  j["id"] = id;
  j["reason"] = reason;
  return j;
}

// ---- prune ----

struct TreeRecord {
  std::string id;
  std::string tree;
  std::size_t line_no = 0;
};

std::vector<TreeRecord> read_trees(std::istream& in) {
  std::vector<TreeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '{') {
      try {
        const auto j = json::parse(line);
        out.push_back({j.at("id").get<std::string>(), j.at("tree").get<std::string>(), line_no});
      } catch (const json::exception& e) {
        throw ParseError(std::string("bad tree record: ") + e.what(), line_no);
      }
    } else {
      out.push_back({"tree-" + std::to_string(line_no), line, line_no});
    }
  }
  return out;
}

int run_prune(Common& c, const std::string& in_path, const std::string& out_path, const std::string& rejects_path,
              std::optional<std::string> lang, std::size_t max_leaves) {
  guard_paths({in_path}, {out_path, rejects_path});
  const Language language = lang ? parse_language(*lang) : c.pc.language;
  Input in(in_path);
  const auto trees = read_trees(in.stream());
  const auto results = map_records<TreeRecord, Emitted>(trees, c.jobs, [&](const TreeRecord& r, std::size_t) {
    Emitted e;
    treebank::ConstNode tree;
    try {
      tree = treebank::parse_tree(r.tree);
    } catch (const ParseError& err) {
      throw Error("line " + std::to_string(r.line_no) + ": record " + r.id + ": " + err.what());
    }
    try {
      e.lines.push_back(to_json(treebank::tree_to_pair(tree, language, r.id, max_leaves)).dump());
    } catch (const ValidationError& err) {
      e.reject = reject_line(r.id, err.what()).dump();
    }
    return e;
  });
  Output out(out_path);
  std::unique_ptr<Output> rejects;
  if (!rejects_path.empty()) rejects = std::make_unique<Output>(rejects_path);
  RunStats stats;
  stats.records_in = trees.size();
  write_emitted(results, out.stream(), rejects ? &rejects->stream() : nullptr, stats);
  out.finish();
  if (rejects) rejects->finish();
  json config;
  config["lang"] = to_string(language);
  config["max_prunable_leaves"] = max_leaves;
  write_manifest(out_path, "prune", config, c.effective_seed(), stats, {in_path});
  report_counts("prune", stats);
  return 0;
}

// ---- hearst ----

int run_hearst(Common& c, const std::string& in_path, const std::string& out_path, const std::string& rejects_path,
               const std::string& patterns_path, std::optional<std::string> lang) {
  guard_paths({in_path, patterns_path}, {out_path, rejects_path});
  const Language language = lang ? parse_language(*lang) : c.pc.language;
  std::vector<hearst::HearstPattern> patterns;
  if (patterns_path.empty()) {
    patterns = hearst::builtin_patterns();
  } else {
    Input p(patterns_path);
    patterns = hearst::read_patterns(p.stream());
  }
  Input in(in_path);
  const auto texts = read_tagged(in.stream());
  const auto results = map_records<TaggedText, Emitted>(texts, c.jobs, [&](const TaggedText& t, std::size_t) {
    Emitted e;
    const auto matches = hearst::find_matches(t, patterns);
    std::vector<std::string> problems;
    for (std::size_t k = 0; k < matches.size(); ++k) {
      try {
        e.lines.push_back(
            to_json(hearst::match_to_pair(t, matches[k], t.id + "#" + std::to_string(k + 1), language)).dump());
      } catch (const ValidationError& err) {
        problems.push_back(err.what());
      }
    }
    if (e.lines.empty()) e.reject = reject_line(t.id, problems.empty() ? "no match" : problems.front()).dump();
    return e;
  });
  Output out(out_path);
  std::unique_ptr<Output> rejects;
  if (!rejects_path.empty()) rejects = std::make_unique<Output>(rejects_path);
  RunStats stats;
  stats.records_in = texts.size();
  write_emitted(results, out.stream(), rejects ? &rejects->stream() : nullptr, stats);
  out.finish();
  if (rejects) rejects->finish();
  json config;
  config["lang"] = to_string(language);
  json pats = json::array();
  for (const auto& p : patterns) pats.push_back(hearst::to_json(p));
  config["patterns"] = std::move(pats);
  write_manifest(out_path, "hearst", config, c.effective_seed(), stats, {in_path});
  report_counts("hearst", stats);
  return 0;
}

// ---- align ----

int run_align(Common& c, const std::string& in_path, const std::string& out_path, const std::string& rejects_path,
              const std::string& format, std::optional<std::string> mask_format_flag,
              std::optional<std::string> null_flag, bool recompute) {
  guard_paths({in_path}, {out_path, rejects_path});
  const std::string mask_format = mask_format_flag.value_or(c.pc.mask_format);
  const std::string null_token = null_flag.value_or(c.pc.null_token);
  check_mask_format(mask_format);
  if (format != "pairs" && format != "joint" && format != "pipelined") {
    throw ValidationError("--format must be pairs, joint or pipelined");
  }
  Input in(in_path);
  const auto pairs = read_pairs(in.stream());
  const auto results = map_records<ExpansionPair, Emitted>(pairs, c.jobs, [&](const ExpansionPair& p, std::size_t) {
    Emitted e;
    if (!align::check_fidelity(p.source, p.expansion)) {
      e.reject = reject_line(p.id, "not a subsequence").dump();
      return e;
    }
    ExpansionPair canon = p;
    if (recompute) canon.modifier_spans.clear();
    canon = align::canonicalize(std::move(canon));
    if (format == "pairs") {
      e.lines.push_back(to_json(canon).dump());
      return e;
    }
    const auto t = format == "joint" ? align::joint_format(canon, null_token) : align::pipelined_format(canon);
    json j;
    j["id"] = canon.id;
    j["input"] = t.input.render(mask_format);
    j["target"] = t.target.render(mask_format);
    if (format == "pipelined") {
      const auto labels = align::location_labels(canon);
      j["labels"] = labels.labels;
    }
    e.lines.push_back(j.dump());
    return e;
  });
  Output out(out_path);
  std::unique_ptr<Output> rejects;
  if (!rejects_path.empty()) rejects = std::make_unique<Output>(rejects_path);
  RunStats stats;
  stats.records_in = pairs.size();
  write_emitted(results, out.stream(), rejects ? &rejects->stream() : nullptr, stats);
  out.finish();
  if (rejects) rejects->finish();
  json config;
  config["format"] = format;
  config["mask_format"] = mask_format;
  config["null_token"] = null_token;
  config["recompute"] = recompute;
  write_manifest(out_path, "align", config, c.effective_seed(), stats, {in_path});
  report_counts("align", stats);
  return 0;
}

// ---- filter ----

int run_filter(Common& c, const std::string& in_path, const std::string& out_path, const std::string& rejects_path,
               const std::string& config_path, std::optional<std::string> lm_flag, std::optional<std::string> nli_flag,
               const std::string& lm_model, const std::string& stopwords_path) {
  guard_paths({in_path, config_path, lm_model}, {out_path, rejects_path});
  construct::FilterConfig cfg = c.pc.filter;
  if (!config_path.empty()) {
    Input cf(config_path);
    json j;
    try {
      j = json::parse(cf.stream());
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("filter config is not valid JSON: ") + e.what(), 1);
    }
    cfg = construct::filter_config_from_json(j);
  }
  if (!stopwords_path.empty()) cfg.stopwords = load_stopwords(stopwords_path);
  Input in(in_path);
  const auto pairs = read_pairs(in.stream());
  const std::string lm_spec = lm_flag.value_or(c.pc.lm_oracle);
  const std::string nli_spec = nli_flag.value_or(c.pc.nli_oracle);
  OracleFactory factory(lm_model, c.pc.language);
  const auto corpus = [&] {
    std::vector<TokenSeq> out;
    for (const auto& p : pairs) {
      if (!p.expansion.empty()) out.push_back(p.expansion);
    }
    return out;
  };
  auto lm = factory.make(ScorerKind::lm, lm_spec, corpus);
  auto nli = factory.make(ScorerKind::nli, nli_spec, corpus);
  if (!lm || !nli) throw ValidationError("filter needs both an lm and an nli oracle");

  const auto results = map_records<ExpansionPair, Emitted>(pairs, c.jobs, [&](const ExpansionPair& p, std::size_t) {
    Emitted e;
    if (!align::check_fidelity(p.source, p.expansion)) {
      json j = to_json(p);
      j["verdict"] = reject_line(p.id, "not a subsequence");
      e.reject = j.dump();
      return e;
    }
    const auto canon = align::canonicalize(p);
    const auto v = construct::apply_filters(canon, cfg, *lm, *nli);
    if (v.keep) {
      e.lines.push_back(to_json(canon).dump());
    } else {
      json j = to_json(canon);
      j["verdict"] = construct::to_json(v);
      e.reject = j.dump();
    }
    return e;
  });
  Output out(out_path);
  std::unique_ptr<Output> rejects;
  if (!rejects_path.empty()) rejects = std::make_unique<Output>(rejects_path);
  RunStats stats;
  stats.records_in = pairs.size();
  write_emitted(results, out.stream(), rejects ? &rejects->stream() : nullptr, stats);
  out.finish();
  if (rejects) rejects->finish();
  json config;
  config["filter"] = construct::to_json(cfg);
  config["lm_oracle"] = lm_spec;
  config["nli_oracle"] = nli_spec;
  config["lm_model"] = lm_model;
  config["language"] = to_string(c.pc.language);
  write_manifest(out_path, "filter", config, c.effective_seed(), stats, {in_path});
  report_counts("filter", stats);
  return 0;
}

// ---- mmp-prep ----

std::pair<std::size_t, std::size_t> parse_range(const std::string& s, const char* flag) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoul(s);
      return {v, v};
    }
    return {std::stoul(s.substr(0, dots)), std::stoul(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw ValidationError(std::string(flag) + " expects N or A..B, got \"" + s + "\"");
  }
}

int run_mmp(Common& c, const std::string& in_path, const std::string& out_path, const std::string& rejects_path,
            std::optional<std::size_t> repeats, std::optional<std::string> k_range,
            std::optional<double> anchor_weight, std::optional<std::string> anchor_side,
            std::optional<std::string> mask_flag) {
  guard_paths({in_path}, {out_path, rejects_path});
  construct::SamplerConfig cfg = c.pc.sampler;
  cfg.seed = c.effective_seed();
  if (repeats) cfg.repeats = *repeats;
  if (k_range) std::tie(cfg.k_min, cfg.k_max) = parse_range(*k_range, "--k");
  if (anchor_weight) cfg.anchor_weight = *anchor_weight;
  if (anchor_side) cfg.anchor_side = construct::parse_anchor_side(*anchor_side);
  construct::validate(cfg);
  const std::string mask_format = mask_flag.value_or(c.pc.mask_format);
  check_mask_format(mask_format);
  Input in(in_path);
  const auto texts = read_tagged(in.stream());
  const auto results = map_records<TaggedText, Emitted>(texts, c.jobs, [&](const TaggedText& t, std::size_t) {
    Emitted e;
    try {
      const auto templates = construct::sample_mmp_templates(t, cfg);
      for (std::size_t r = 0; r < templates.size(); ++r) {
        json j;
        j["id"] = t.id;
        j["repeat"] = r + 1;
        j["input"] = templates[r].input.render(mask_format);
        j["target"] = templates[r].target.render(mask_format);
        e.lines.push_back(j.dump());
      }
    } catch (const ValidationError& err) {
      e.reject = reject_line(t.id, err.what()).dump();
    }
    return e;
  });
  Output out(out_path);
  std::unique_ptr<Output> rejects;
  if (!rejects_path.empty()) rejects = std::make_unique<Output>(rejects_path);
  RunStats stats;
  stats.records_in = texts.size();
  write_emitted(results, out.stream(), rejects ? &rejects->stream() : nullptr, stats);
  out.finish();
  if (rejects) rejects->finish();
  json config;
  config["sampler"] = construct::to_json(cfg);
  config["mask_format"] = mask_format;
  write_manifest(out_path, "mmp-prep", config, cfg.seed, stats, {in_path});
  report_counts("mmp-prep", stats);
  return 0;
}

// ---- pretrain-mask ----

int run_pretrain(Common& c, const std::string& in_path, const std::string& out_path, double rate,
                 const std::string& span_len, std::optional<std::string> mask_flag) {
  guard_paths({in_path}, {out_path});
  const auto [lo, hi] = parse_range(span_len, "--span-len");
  const std::string mask_format = mask_flag.value_or(c.pc.mask_format);
  check_mask_format(mask_format);
  const std::uint64_t seed = c.effective_seed();
  Input in(in_path);
  const auto texts = read_tagged(in.stream());
  const auto results = map_records<TaggedText, Emitted>(texts, c.jobs, [&](const TaggedText& t, std::size_t) {
    Emitted e;
    const auto m = construct::mask_for_pretraining(t, rate, lo, hi, seed);
    json j;
    j["id"] = t.id;
    j["input"] = m.templ.input.render(mask_format);
    j["target"] = m.templ.target.render(mask_format);
    j["masked_tokens"] = m.masked_tokens;
    j["hq_spans_masked"] = m.hq_spans_masked;
    if (m.masked_tokens == 0) j["flagged"] = "no masks";
    e.lines.push_back(j.dump());
    return e;
  });
  Output out(out_path);
  RunStats stats;
  stats.records_in = texts.size();
  write_emitted(results, out.stream(), nullptr, stats);
  out.finish();
  json config;
  config["rate"] = rate;
  config["span_len"] = {lo, hi};
  config["mask_format"] = mask_format;
  write_manifest(out_path, "pretrain-mask", config, seed, stats, {in_path});
  report_counts("pretrain-mask", stats);
  return 0;
}

// ---- lm ----

int run_lm_train(Common& c, const std::string& corpus_path, const std::string& out_path, std::size_t order,
                 double add_k) {
  guard_paths({corpus_path}, {out_path});
  if (out_path == kStdio) throw ValidationError("lm train needs --out FILE");
  Input in(corpus_path);
  const auto corpus = read_corpus(in.stream());
  const auto model = lm::train(corpus, order, add_k);
  lm::save(model, std::filesystem::path(out_path));
  RunStats stats;
  stats.records_in = corpus.size();
  stats.records_out = 1;
  json config;
  config["order"] = order;
  config["add_k"] = add_k;
  write_manifest(out_path, "lm train", config, c.effective_seed(), stats, {corpus_path});
  report_counts("lm train", stats);
  return 0;
}

int run_lm_score(Common& c, const std::string& model_path, const std::string& in_path, const std::string& out_path) {
  guard_paths({model_path, in_path}, {out_path});
  const auto model = lm::load(std::filesystem::path(model_path));
  Input in(in_path);
  const auto corpus = read_corpus(in.stream());
  Output out(out_path);
  RunStats stats;
  stats.records_in = corpus.size();
  for (const auto& s : corpus) {
    const auto score = lm::nll(model, s);
    json j;
    j["nll_sum"] = score.nll_sum;
    j["token_count"] = score.token_count;
    j["ppl"] = score.perplexity();
    out.stream() << j.dump() << '\n';
    ++stats.records_out;
  }
  out.finish();
  json config;
  config["model"] = model_path;
  write_manifest(out_path, "lm score", config, c.effective_seed(), stats, {in_path});
  return 0;
}

// ---- metrics / report ----

int run_metrics(Common& c, const std::string& sys_path, const std::string& ref_path, const std::string& report_path,
                std::optional<std::string> lm_flag, std::optional<std::string> nli_flag,
                std::optional<std::string> infill_flag, const std::string& lm_model,
                std::optional<std::string> mask_flag) {
  guard_paths({sys_path, ref_path, lm_model}, {report_path});
  std::vector<ExpansionPair> sys, ref;
  {
    Input s(sys_path);
    sys = read_pairs(s.stream());
  }
  {
    Input r(ref_path);
    ref = read_pairs(r.stream());
  }
  const std::string lm_spec = lm_flag.value_or(c.pc.lm_oracle);
  const std::string nli_spec = nli_flag.value_or(c.pc.nli_oracle);
  const std::string infill_spec = infill_flag.value_or(c.pc.infill_oracle);
  OracleFactory factory(lm_model, c.pc.language);
  const auto corpus = [&] {
    std::vector<TokenSeq> out;
    for (const auto& p : ref) {
      if (!p.expansion.empty()) out.push_back(p.expansion);
    }
    return out;
  };
  metrics::Oracles oracles;
  oracles.lm = factory.make(ScorerKind::lm, lm_spec, corpus);
  oracles.nli = factory.make(ScorerKind::nli, nli_spec, corpus);
  oracles.infill = factory.make(ScorerKind::infill, infill_spec, corpus);
  metrics::EvalConfig cfg;
  cfg.mask_format = mask_flag.value_or(c.pc.mask_format);
  cfg.jobs = c.jobs;
  const auto report = metrics::evaluate_corpus(sys, ref, oracles, cfg);
  Output out(report_path);
  out.stream() << metrics::to_json(report).dump(2) << '\n';
  out.finish();
  RunStats stats;
  stats.records_in = sys.size();
  stats.records_out = report.per_pair.size();
  json config;
  config["lm_oracle"] = lm_spec;
  config["nli_oracle"] = nli_spec;
  config["infill_oracle"] = infill_spec;
  config["lm_model"] = lm_model;
  config["mask_format"] = cfg.mask_format;
  config["language"] = to_string(c.pc.language);
  write_manifest(report_path, "metrics", config, c.effective_seed(), stats, {sys_path, ref_path});
  if (report_path != kStdio) std::cerr << metrics::render_table(report);
  return 0;
}

int run_report(const std::string& in_path, const std::string& out_path) {
  guard_paths({in_path}, {out_path});
  Input in(in_path);
  json j;
  try {
    j = json::parse(in.stream());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what(), 1);
  }
  const auto table = metrics::render_table(metrics::report_from_json(j));
  Output out(out_path);
  out.stream() << table;
  out.finish();
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Text-expansion corpus construction and evaluation"};
  app.name("expanse");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(EXPANSE_VERSION));

  Common c;
  app.add_option("--jobs", c.jobs, "Worker threads")->envname("EXPANSE_JOBS")->check(CLI::PositiveNumber);
  c.seed_opt = app.add_option("--seed", c.seed, "Run seed (overrides the pipeline config)");
  app.add_option("--pipeline-config", c.pipeline_config, "Shared pipeline configuration (JSON)")
      ->check(CLI::ExistingFile);

  std::string in_path = kStdio, out_path = kStdio, rejects_path;
  std::optional<std::string> lang, mask_format, null_token, lm_oracle, nli_oracle, infill_oracle;
  std::string lm_model;

  auto* prune = app.add_subcommand("prune", "Constituency-tree pruning into (X, Y) pairs");
  std::size_t max_leaves = treebank::kDefaultMaxPrunableLeaves;
  prune->add_option("--input,-i", in_path, "Trees, one per line or JSONL {id, tree}");
  prune->add_option("--output,-o", out_path, "Pairs JSONL");
  prune->add_option("--rejects", rejects_path, "Rejected record log");
  prune->add_option("--lang", lang)->check(CLI::IsMember({"en", "zh"}));
  prune->add_option("--max-prunable-leaves", max_leaves);

  auto* hearst_cmd = app.add_subcommand("hearst", "Hypernym-modifier extraction with Hearst patterns");
  std::string patterns_path;
  hearst_cmd->add_option("--input,-i", in_path, "TaggedText JSONL");
  hearst_cmd->add_option("--output,-o", out_path, "Pairs JSONL");
  hearst_cmd->add_option("--rejects", rejects_path, "Rejected record log");
  hearst_cmd->add_option("--patterns", patterns_path, "Pattern JSONL (default: built-in)");
  hearst_cmd->add_option("--lang", lang)->check(CLI::IsMember({"en", "zh"}));

  auto* align_cmd = app.add_subcommand("align", "Span recovery and Locate&Infill formats");
  std::string format = "pairs";
  bool recompute = false;
  align_cmd->add_option("--input,-i", in_path, "Pairs JSONL");
  align_cmd->add_option("--output,-o", out_path, "Pairs or template JSONL");
  align_cmd->add_option("--rejects", rejects_path, "Rejected record log");
  align_cmd->add_option("--format", format, "pairs | joint | pipelined");
  align_cmd->add_option("--mask-format", mask_format);
  align_cmd->add_option("--null-token", null_token);
  align_cmd->add_flag("--recompute", recompute, "Re-derive spans even when present");

  auto* filter = app.add_subcommand("filter", "Noisy-pair filters");
  std::string filter_config, stopwords_path;
  filter->add_option("--input,-i", in_path, "Pairs JSONL");
  filter->add_option("--output,-o", out_path, "Kept pairs JSONL");
  filter->add_option("--rejects", rejects_path, "Rejected pairs with verdicts");
  filter->add_option("--config", filter_config, "FilterConfig JSON");
  filter->add_option("--lm-oracle", lm_oracle, "builtin | command | tcp://host:port");
  filter->add_option("--nli-oracle", nli_oracle, "builtin | command | tcp://host:port");
  filter->add_option("--lm-model", lm_model, "Built-in n-gram model file");
  filter->add_option("--stopwords", stopwords_path, "Stopword list, one per line");

  auto* mmp = app.add_subcommand("mmp-prep", "Masked-modifier-prediction templates");
  std::optional<std::size_t> repeats;
  std::optional<std::string> k_range, anchor_side;
  std::optional<double> anchor_weight;
  mmp->add_option("--input,-i", in_path, "TaggedText JSONL");
  mmp->add_option("--output,-o", out_path, "Template JSONL");
  mmp->add_option("--rejects", rejects_path, "Rejected record log");
  mmp->add_option("--repeats", repeats);
  mmp->add_option("--k", k_range, "Slots per template, N or A..B");
  mmp->add_option("--anchor-weight", anchor_weight);
  mmp->add_option("--anchor-side", anchor_side)->check(CLI::IsMember({"before", "after", "both"}));
  mmp->add_option("--mask-format", mask_format);

  auto* pretrain = app.add_subcommand("pretrain-mask", "Pre-training masks over high-quality modifiers");
  double rate = 0.25;
  std::string span_len = "1..10";
  pretrain->add_option("--input,-i", in_path, "TaggedText JSONL");
  pretrain->add_option("--output,-o", out_path, "Template JSONL");
  pretrain->add_option("--rate", rate)->check(CLI::Range(0.0, 1.0));
  pretrain->add_option("--span-len", span_len, "Random span length range A..B");
  pretrain->add_option("--mask-format", mask_format);

  auto* lm_cmd = app.add_subcommand("lm", "Built-in n-gram language model");
  lm_cmd->require_subcommand(1);
  auto* lm_train = lm_cmd->add_subcommand("train", "Train and save a model");
  std::size_t order = 3;
  double add_k = 0.01;
  std::string corpus_path = kStdio, model_out = kStdio;
  lm_train->add_option("--corpus", corpus_path, "Tokenized lines or pairs/TaggedText JSONL");
  lm_train->add_option("--out", model_out, "Model file")->required();
  lm_train->add_option("--order", order)->check(CLI::PositiveNumber);
  lm_train->add_option("--add-k", add_k)->check(CLI::PositiveNumber);
  auto* lm_score = lm_cmd->add_subcommand("score", "Per-line NLL and perplexity");
  std::string model_in;
  lm_score->add_option("--model", model_in)->required();
  lm_score->add_option("--input,-i", in_path);
  lm_score->add_option("--output,-o", out_path);

  auto* metrics_cmd = app.add_subcommand("metrics", "Evaluate system pairs against references");
  std::string sys_path, ref_path, report_path = kStdio;
  metrics_cmd->add_option("--sys", sys_path, "System pairs JSONL")->required();
  metrics_cmd->add_option("--ref", ref_path, "Reference pairs JSONL")->required();
  metrics_cmd->add_option("--report", report_path, "Report JSON");
  metrics_cmd->add_option("--lm-oracle", lm_oracle, "builtin | none | command | tcp://host:port");
  metrics_cmd->add_option("--nli-oracle", nli_oracle, "builtin | none | command | tcp://host:port");
  metrics_cmd->add_option("--infill-oracle", infill_oracle, "builtin | none | command | tcp://host:port");
  metrics_cmd->add_option("--lm-model", lm_model, "Built-in n-gram model file");
  metrics_cmd->add_option("--mask-format", mask_format);

  auto* report = app.add_subcommand("report", "Render a metrics report as a table");
  report->add_option("--input,-i", in_path, "Report JSON");
  report->add_option("--output,-o", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!c.pipeline_config.empty()) c.pc = load_pipeline_config(c.pipeline_config);
    if (*prune) return run_prune(c, in_path, out_path, rejects_path, lang, max_leaves);
    if (*hearst_cmd) return run_hearst(c, in_path, out_path, rejects_path, patterns_path, lang);
    if (*align_cmd) {
      return run_align(c, in_path, out_path, rejects_path, format, mask_format, null_token, recompute);
    }
    if (*filter) {
      return run_filter(c, in_path, out_path, rejects_path, filter_config, lm_oracle, nli_oracle, lm_model,
                        stopwords_path);
    }
    if (*mmp) return run_mmp(c, in_path, out_path, rejects_path, repeats, k_range, anchor_weight, anchor_side, mask_format);
    if (*pretrain) return run_pretrain(c, in_path, out_path, rate, span_len, mask_format);
    if (*lm_train) return run_lm_train(c, corpus_path, model_out, order, add_k);
    if (*lm_score) return run_lm_score(c, model_in, in_path, out_path);
    if (*metrics_cmd) {
      return run_metrics(c, sys_path, ref_path, report_path, lm_oracle, nli_oracle, infill_oracle, lm_model,
                         mask_format);
    }
    if (*report) return run_report(in_path, out_path);
  } catch (const OracleError& e) {
    std::cerr << "expanse: oracle failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "expanse: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "expanse: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
