#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "expanse/corpus.hpp"
#include "expanse/template.hpp"

namespace expanse::lm {

inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kBos = "<bos>";
inline constexpr const char* kEos = "<eos>";
inline constexpr const char* kModelMagic = "EXPANSE-NGLM-1";

// Summed negative log-likelihood in nats over `token_count` scored tokens.
struct LmScore {
  double nll_sum = 0.0;
  std::size_t token_count = 0;

  double perplexity() const;
};

// Add-k smoothed n-gram model without backoff:
//   p(t | ctx) = (c(ctx, t) + k) / (c(ctx) + k·|V|)
// V holds every training token plus <unk> and <eos>; <bos> only pads
// contexts and is never predicted.
class NgramModel {
 public:
  using Context = std::vector<std::string>;

  NgramModel(std::size_t order, double add_k);

  std::size_t order() const noexcept { return order_; }
  double add_k() const noexcept { return add_k_; }
  const std::set<std::string>& vocab() const noexcept { return vocab_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }

  // Maps out-of-vocabulary tokens to <unk>.
  const std::string& lookup(const std::string& token) const;

  double prob(const Context& context, const std::string& token) const;
  double log_prob(const Context& context, const std::string& token) const;

  // Last order-1 tokens of `history`, left-padded with <bos>.
  Context context_of(const TokenSeq& history, std::size_t end) const;

  const std::map<Context, std::map<std::string, std::size_t>>& counts() const noexcept { return counts_; }
  std::size_t context_total(const Context& context) const;

  void add_vocab(const std::string& token);
  void add_count(const Context& context, const std::string& token, std::size_t n = 1);

  bool operator==(const NgramModel&) const = default;

 private:
  std::size_t order_;
  double add_k_;
  std::set<std::string> vocab_;
  std::map<Context, std::map<std::string, std::size_t>> counts_;
  std::map<Context, std::size_t> totals_;
};

// Counts n-grams with <bos> padding and a trailing <eos>. Throws on an empty
// corpus or order 0.
NgramModel train(const std::vector<TokenSeq>& corpus, std::size_t order = 3, double add_k = 0.01);

// A model with the given vocabulary and no counts: every token has
// probability 1/|V|.
NgramModel uniform_model(const std::vector<std::string>& tokens, std::size_t order = 1);

// Scores tokens plus the closing <eos>; token_count = |tokens| + 1.
LmScore nll(const NgramModel& model, const TokenSeq& tokens);

// Scores the target's literal tokens left to right, each conditioned on the
// spliced sentence to its left. Slots are neither scored nor counted, and no
// <eos> term is added.
LmScore infill_nll(const NgramModel& model, const InfillTemplatePair& templ);

void save(const NgramModel& model, std::ostream& out);
NgramModel load(std::istream& in);
void save(const NgramModel& model, const std::filesystem::path& path);
NgramModel load(const std::filesystem::path& path);

}  // namespace expanse::lm
