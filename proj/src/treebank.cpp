#include "expanse/treebank.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "expanse/error.hpp"

namespace expanse::treebank {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

class TreeReader {
 public:
  explicit TreeReader(std::string_view text) : text_(text) {}

  ConstNode read_root() {
    skip_space();
    if (at_end()) throw ParseError("empty input", pos_);
    if (text_[pos_] != '(') throw ParseError("expected '('", pos_);
    ConstNode root = read_node(/*top=*/true);
    skip_space();
    if (!at_end()) {
      if (text_[pos_] == ')') throw ParseError("unbalanced parentheses", pos_);
      throw ParseError("trailing content after tree", pos_);
    }
    return root;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }

  void skip_space() {
    while (!at_end() && is_space(text_[pos_])) ++pos_;
  }

  std::string_view read_atom() {
    const std::size_t start = pos_;
    while (!at_end() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')') ++pos_;
    return text_.substr(start, pos_ - start);
  }

  // Precondition: text_[pos_] == '('.
  ConstNode read_node(bool top) {
    const std::size_t open = pos_;
    ++pos_;
    skip_space();
    if (at_end()) throw ParseError("unbalanced parentheses", open);

    ConstNode node;
    bool unlabeled = false;
    if (text_[pos_] == ')') throw ParseError("empty label", pos_);
    if (text_[pos_] == '(') {
      if (!top) throw ParseError("empty label", pos_);
      node.label = "ROOT";
      unlabeled = true;
    } else {
      node.label = std::string(read_atom());
    }

    while (true) {
      skip_space();
      if (at_end()) throw ParseError("unbalanced parentheses", open);
      const char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        if (node.leaf_token) throw ParseError("leaf mixes a token with constituents", pos_);
        node.children.push_back(read_node(false));
        continue;
      }
      const std::size_t at = pos_;
      auto atom = read_atom();
      if (!node.children.empty()) throw ParseError("leaf mixes a token with constituents", at);
      if (node.leaf_token) throw ParseError("leaf with more than one token", at);
      node.leaf_token = std::string(atom);
    }

    if (!node.leaf_token && node.children.empty()) throw ParseError("leaf with zero tokens", open);
    if (unlabeled && node.children.size() != 1) throw ParseError("empty label", open + 1);
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string render_bracket(const std::string& token) {
  static const std::array<std::pair<std::string_view, std::string_view>, 6> kEscapes = {{
      {"-LRB-", "("}, {"-RRB-", ")"}, {"-LSB-", "["}, {"-RSB-", "]"}, {"-LCB-", "{"}, {"-RCB-", "}"},
  }};
  for (const auto& [esc, raw] : kEscapes) {
    if (token == esc) return std::string(raw);
  }
  return token;
}

void collect_yield(const ConstNode& node, TokenSeq& out) {
  if (node.is_leaf()) {
    if (node.label != "-NONE-") out.push_back(render_bracket(*node.leaf_token));
    return;
  }
  for (const auto& c : node.children) collect_yield(c, out);
}

void to_string_impl(const ConstNode& node, std::string& out) {
  out += '(';
  out += node.label;
  if (node.is_leaf()) {
    out += ' ';
    out += *node.leaf_token;
  } else {
    for (const auto& c : node.children) {
      out += ' ';
      to_string_impl(c, out);
    }
  }
  out += ')';
}

std::optional<ConstNode> normalize_impl(const ConstNode& node) {
  ConstNode out;
  out.label = normalize_label(node.label);
  if (node.is_leaf()) {
    if (out.label == "-NONE-") return std::nullopt;
    out.leaf_token = node.leaf_token;
    return out;
  }
  for (const auto& c : node.children) {
    if (auto n = normalize_impl(c)) out.children.push_back(std::move(*n));
  }
  if (out.children.empty()) return std::nullopt;
  return out;
}

// Marks leaves to drop. Leaf indices follow the normalized tree's yield.
class Pruner {
 public:
  Pruner(std::size_t leaves, std::size_t max_prunable) : dropped_(leaves, false), max_(max_prunable) {}

  void english(const ConstNode& node, std::size_t first) {
    if (node.is_leaf()) return;
    const auto& kids = node.children;
    const std::string& label = node.label;

    // A WH-introduced SBAR goes as a whole before any child-level rule.
    if (label == "SBAR" && starts_with(kids.front().label, "WH")) {
      if (try_drop(first, leaf_count(node))) return;
    }

    const auto offsets = child_offsets(kids, first);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const auto& kid = kids[i];
      if (label == "NP" && kid.label == "-LRB-") {
        if (auto close = matching_rrb(kids, i)) {
          std::size_t leaves = 0;
          for (std::size_t j = i; j <= *close; ++j) leaves += leaf_count(kids[j]);
          if (try_drop(offsets[i], leaves)) {
            i = *close;
            continue;
          }
        }
      }
      if (english_candidate(label, kid.label) && try_drop(offsets[i], leaf_count(kid))) continue;
      english(kid, offsets[i]);
    }
  }

  void chinese(const ConstNode& node, std::size_t first) {
    if (node.is_leaf()) return;
    static constexpr std::array<std::string_view, 7> kPrunable = {"DNP", "CP", "DVP", "ADVP", "QP", "LCP", "PP"};
    const auto offsets = child_offsets(node.children, first);
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      const auto& kid = node.children[i];
      const bool candidate = std::find(kPrunable.begin(), kPrunable.end(), kid.label) != kPrunable.end();
      if (candidate && try_drop(offsets[i], leaf_count(kid))) continue;
      chinese(kid, offsets[i]);
    }
  }

  const std::vector<bool>& dropped() const { return dropped_; }

 private:
  static bool english_candidate(const std::string& parent, const std::string& child) {
    if (parent == "S" || parent == "VP") return child == "PP" || child == "ADVP";
    if (parent == "NP") return child == "ADJP" || child == "JJ" || child == "CD" || child == "PP";
    if (parent == "ADJP") return starts_with(child, "RB");
    return false;
  }

  static std::optional<std::size_t> matching_rrb(const std::vector<ConstNode>& kids, std::size_t open) {
    int depth = 0;
    for (std::size_t j = open; j < kids.size(); ++j) {
      if (kids[j].label == "-LRB-") ++depth;
      if (kids[j].label == "-RRB-" && --depth == 0) return j;
    }
    return std::nullopt;
  }

  static std::vector<std::size_t> child_offsets(const std::vector<ConstNode>& kids, std::size_t first) {
    std::vector<std::size_t> out;
    out.reserve(kids.size());
    for (const auto& k : kids) {
      out.push_back(first);
      first += leaf_count(k);
    }
    return out;
  }

  bool try_drop(std::size_t first, std::size_t count) {
    if (count > max_) return false;
    std::fill(dropped_.begin() + static_cast<std::ptrdiff_t>(first),
              dropped_.begin() + static_cast<std::ptrdiff_t>(first + count), true);
    return true;
  }

  std::vector<bool> dropped_;
  std::size_t max_;
};

PruneOutcome finish(const ConstNode& normalized, const std::vector<bool>& dropped) {
  const TokenSeq full = yield_tokens(normalized);
  PruneOutcome out;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (!dropped[i]) {
      out.skeleton.push_back(full[i]);
      continue;
    }
    if (!out.pruned_spans.empty() && out.pruned_spans.back().end == i) {
      out.pruned_spans.back().end = i + 1;
    } else {
      out.pruned_spans.push_back({i, i + 1});
    }
  }
  if (out.skeleton.empty()) throw ValidationError("empty skeleton");
  return out;
}

}  // namespace

ConstNode parse_tree(std::string_view text) {
  return TreeReader(text).read_root();
}

std::string to_string(const ConstNode& node) {
  std::string out;
  to_string_impl(node, out);
  return out;
}

TokenSeq yield_tokens(const ConstNode& node) {
  TokenSeq out;
  collect_yield(node, out);
  return out;
}

std::size_t leaf_count(const ConstNode& node) {
  if (node.is_leaf()) return node.label == "-NONE-" ? 0 : 1;
  std::size_t n = 0;
  for (const auto& c : node.children) n += leaf_count(c);
  return n;
}

std::string normalize_label(std::string_view label) {
  if (label == "-LRB-" || label == "-RRB-" || label == "-NONE-") return std::string(label);
  if (label.empty() || label.front() == '-') return std::string(label);
  const auto cut = label.find_first_of("-=");
  return std::string(label.substr(0, cut));
}

ConstNode normalize_tree(const ConstNode& node) {
  auto out = normalize_impl(node);
  if (!out) throw ValidationError("tree has no surface tokens");
  return std::move(*out);
}

PruneOutcome prune_english(const ConstNode& tree, std::size_t max_prunable_leaves) {
  const ConstNode norm = normalize_tree(tree);
  Pruner pruner(leaf_count(norm), max_prunable_leaves);
  pruner.english(norm, 0);
  return finish(norm, pruner.dropped());
}

PruneOutcome prune_chinese(const ConstNode& tree, std::size_t max_prunable_leaves) {
  const ConstNode norm = normalize_tree(tree);
  Pruner pruner(leaf_count(norm), max_prunable_leaves);
  pruner.chinese(norm, 0);
  return finish(norm, pruner.dropped());
}

PruneOutcome prune(const ConstNode& tree, Language language, std::size_t max_prunable_leaves) {
  return language == Language::en ? prune_english(tree, max_prunable_leaves)
                                  : prune_chinese(tree, max_prunable_leaves);
}

ExpansionPair tree_to_pair(const ConstNode& tree, Language language, std::string id,
                           std::size_t max_prunable_leaves) {
  auto outcome = prune(tree, language, max_prunable_leaves);
  return make_pair(std::move(id), language, std::move(outcome.skeleton), yield_tokens(tree),
                   std::move(outcome.pruned_spans), Provenance::CTP);
}

}  // namespace expanse::treebank
