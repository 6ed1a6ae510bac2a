#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "expanse/corpus.hpp"

namespace expanse::treebank {

// A constituent. Preterminals are leaves: `(NN dog)` is a node labeled NN
// with leaf_token "dog" and no children.
struct ConstNode {
  std::string label;
  std::vector<ConstNode> children;
  std::optional<std::string> leaf_token;

  bool is_leaf() const noexcept { return leaf_token.has_value(); }
  bool operator==(const ConstNode&) const = default;
};

struct PruneOutcome {
  TokenSeq skeleton;
  std::vector<Span> pruned_spans;  // over the yield, merged maximal runs
};

inline constexpr std::size_t kDefaultMaxPrunableLeaves = 10;

// Parses one S-expression. A PTB-style unlabeled outer bracket `( (S ...) )`
// is read as a ROOT node. Throws ParseError carrying the byte offset.
ConstNode parse_tree(std::string_view text);

// Renders the tree back to one-line bracketed form (-LRB-/-RRB- as stored).
std::string to_string(const ConstNode& node);

// In-order leaf tokens with -LRB-/-RRB- rendered as "(" and ")".
// Empty-category (-NONE-) leaves have no surface form and are skipped.
TokenSeq yield_tokens(const ConstNode& node);

std::size_t leaf_count(const ConstNode& node);

// NP-SBJ -> NP, NP=2 -> NP; -LRB-, -RRB-, -NONE- are kept verbatim.
std::string normalize_label(std::string_view label);

// Copy of the tree with labels normalized and -NONE- leaves (plus any
// constituents left empty by their removal) dropped.
ConstNode normalize_tree(const ConstNode& node);

// English skeleton extraction. Throws ValidationError("empty skeleton") when
// every leaf would be pruned.
PruneOutcome prune_english(const ConstNode& tree,
                           std::size_t max_prunable_leaves = kDefaultMaxPrunableLeaves);

// Chinese skeleton extraction: DNP, CP, DVP, ADVP, QP, LCP and PP children are
// dropped at every level.
PruneOutcome prune_chinese(const ConstNode& tree,
                           std::size_t max_prunable_leaves = kDefaultMaxPrunableLeaves);

PruneOutcome prune(const ConstNode& tree, Language language,
                   std::size_t max_prunable_leaves = kDefaultMaxPrunableLeaves);

// Y = full yield, X = skeleton, spans = pruned runs, provenance CTP.
ExpansionPair tree_to_pair(const ConstNode& tree, Language language, std::string id,
                           std::size_t max_prunable_leaves = kDefaultMaxPrunableLeaves);

}  // namespace expanse::treebank
