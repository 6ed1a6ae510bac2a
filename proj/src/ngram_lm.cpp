#include "expanse/ngram_lm.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "expanse/error.hpp"

namespace expanse::lm {

double LmScore::perplexity() const {
  if (token_count == 0) throw ValidationError("perplexity of zero tokens");
  return std::exp(nll_sum / static_cast<double>(token_count));
}

NgramModel::NgramModel(std::size_t order, double add_k) : order_(order), add_k_(add_k) {
  if (order == 0) throw ValidationError("order must be >= 1");
  if (!(add_k > 0.0) || !std::isfinite(add_k)) throw ValidationError("add_k must be a positive finite number");
  vocab_.insert(kUnk);
  vocab_.insert(kEos);
}

const std::string& NgramModel::lookup(const std::string& token) const {
  static const std::string unk = kUnk;
  auto it = vocab_.find(token);
  return it == vocab_.end() ? unk : *it;
}

std::size_t NgramModel::context_total(const Context& context) const {
  auto it = totals_.find(context);
  return it == totals_.end() ? 0 : it->second;
}

double NgramModel::prob(const Context& context, const std::string& token) const {
  const std::string& t = lookup(token);
  std::size_t c = 0;
  if (auto it = counts_.find(context); it != counts_.end()) {
    if (auto jt = it->second.find(t); jt != it->second.end()) c = jt->second;
  }
  const double v = static_cast<double>(vocab_.size());
  return (static_cast<double>(c) + add_k_) / (static_cast<double>(context_total(context)) + add_k_ * v);
}

double NgramModel::log_prob(const Context& context, const std::string& token) const {
  return std::log(prob(context, token));
}

NgramModel::Context NgramModel::context_of(const TokenSeq& history, std::size_t end) const {
  const std::size_t width = order_ - 1;
  Context ctx;
  ctx.reserve(width);
  for (std::size_t k = width; k > 0; --k) {
    if (end >= k) {
      ctx.push_back(lookup(history[end - k]));
    } else {
      ctx.push_back(kBos);
    }
  }
  return ctx;
}

void NgramModel::add_vocab(const std::string& token) {
  if (token == kBos) throw ValidationError("<bos> cannot be a vocabulary token");
  vocab_.insert(token);
}

void NgramModel::add_count(const Context& context, const std::string& token, std::size_t n) {
  if (context.size() != order_ - 1) throw ValidationError("context width must be order-1");
  counts_[context][token] += n;
  totals_[context] += n;
}

NgramModel train(const std::vector<TokenSeq>& corpus, std::size_t order, double add_k) {
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
  NgramModel model(order, add_k);
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) model.add_vocab(t);
  }
  for (const auto& sentence : corpus) {
    for (std::size_t i = 0; i <= sentence.size(); ++i) {
      const std::string& t = i < sentence.size() ? sentence[i] : std::string(kEos);
      model.add_count(model.context_of(sentence, i), t);
    }
  }
  return model;
}

NgramModel uniform_model(const std::vector<std::string>& tokens, std::size_t order) {
  NgramModel model(order, 1.0);
  for (const auto& t : tokens) model.add_vocab(t);
  return model;
}

LmScore nll(const NgramModel& model, const TokenSeq& tokens) {
  if (tokens.empty()) throw ValidationError("empty input");
  LmScore score;
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    const std::string& t = i < tokens.size() ? tokens[i] : std::string(kEos);
    score.nll_sum -= model.log_prob(model.context_of(tokens, i), t);
  }
  score.token_count = tokens.size() + 1;
  return score;
}

LmScore infill_nll(const NgramModel& model, const InfillTemplatePair& templ) {
  const auto runs = templ.target.literal_runs();
  if (runs.size() != templ.input.slot_count()) {
    throw ValidationError("malformed template: " + std::to_string(templ.input.slot_count()) +
                          " input slots but " + std::to_string(runs.size()) + " target runs");
  }
  TokenSeq sentence;
  std::vector<bool> scored;
  for (const auto& seg : templ.input.segments) {
    if (const auto* lit = std::get_if<Literal>(&seg)) {
      sentence.insert(sentence.end(), lit->tokens.begin(), lit->tokens.end());
      scored.insert(scored.end(), lit->tokens.size(), false);
    } else {
      const std::size_t k = std::get<Slot>(seg).index;
      if (k == 0 || k > runs.size()) throw ValidationError("malformed template: slot index out of range");
      const auto& fill = runs[k - 1];
      sentence.insert(sentence.end(), fill.begin(), fill.end());
      scored.insert(scored.end(), fill.size(), true);
    }
  }
  LmScore score;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (!scored[i]) continue;
    score.nll_sum -= model.log_prob(model.context_of(sentence, i), sentence[i]);
    ++score.token_count;
  }
  if (score.token_count == 0) throw ValidationError("no scorable tokens");
  return score;
}

void save(const NgramModel& model, std::ostream& out) {
  nlohmann::ordered_json j;
  j["magic"] = kModelMagic;
  j["order"] = model.order();
  j["add_k"] = model.add_k();
  j["vocab"] = model.vocab();
  auto counts = nlohmann::ordered_json::array();
  for (const auto& [ctx, table] : model.counts()) {
    for (const auto& [tok, n] : table) counts.push_back({ctx, tok, n});
  }
  j["counts"] = std::move(counts);
  out << j.dump() << '\n';
  if (!out) throw Error("failed to write model");
}

NgramModel load(std::istream& in) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what(), 1);
  }
  try {
    if (j.value("magic", "") != kModelMagic) {
      throw ValidationError(std::string("model file: expected magic \"") + kModelMagic + "\"");
    }
    NgramModel model(j.at("order").get<std::size_t>(), j.at("add_k").get<double>());
    for (const auto& t : j.at("vocab")) model.add_vocab(t.get<std::string>());
    for (const auto& e : j.at("counts")) {
      model.add_count(e.at(0).get<NgramModel::Context>(), e.at(1).get<std::string>(), e.at(2).get<std::size_t>());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save(const NgramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save(model, out);
}

NgramModel load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load(in);
}

}  // namespace expanse::lm
