#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace expanse {

// Pre-tokenized text. English is whitespace tokenized with punctuation split;
// Chinese is pre-segmented, one segment per token.
using TokenSeq = std::vector<std::string>;

// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

enum class Language { en, zh };

enum class Provenance { NSC, CTP, IAR, MMP, MODEL, REF, UNKNOWN };

std::string_view to_string(Language lang);
std::string_view to_string(Provenance prov);
Language parse_language(std::string_view s);
Provenance parse_provenance(std::string_view s);

// An (X, Y) text-expansion sample. `modifier_spans` index into `expansion`;
// empty means either "no insertions" (X == Y) or "not yet aligned".
struct ExpansionPair {
  std::string id;
  Language language = Language::en;
  TokenSeq source;
  TokenSeq expansion;
  std::vector<Span> modifier_spans;
  Provenance provenance = Provenance::UNKNOWN;
  // Fields found on input that this schema does not know; written back as-is.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  bool operator==(const ExpansionPair&) const = default;

  // True when spans are present, or when X == Y (trivially aligned).
  bool spans_populated() const;
};

// Builds a pair, merging touching spans into maximal runs and validating every
// invariant. Throws ValidationError naming the offending field.
ExpansionPair make_pair(std::string id, Language language, TokenSeq source, TokenSeq expansion,
                        std::vector<Span> modifier_spans, Provenance provenance);

// Sorts and merges spans that overlap-free touch (end == next.start).
// Throws ValidationError("overlapping spans") on overlap.
std::vector<Span> merge_adjacent(std::vector<Span> spans);

void validate(const ExpansionPair& pair);

// Y with the tokens covered by `spans` removed.
TokenSeq remove_spans(const TokenSeq& tokens, const std::vector<Span>& spans);

// Token runs of Y under each modifier span, in order.
std::vector<TokenSeq> surface_modifiers(const ExpansionPair& pair);

std::string join(const TokenSeq& tokens, std::string_view sep = " ");
TokenSeq split_ws(std::string_view text);

nlohmann::ordered_json to_json(const ExpansionPair& pair);
ExpansionPair pair_from_json(const nlohmann::ordered_json& j);

// One JSON object per line. Errors carry the 1-based line number.
std::vector<ExpansionPair> read_pairs(std::istream& in);
void write_pairs(const std::vector<ExpansionPair>& pairs, std::ostream& out);
void write_pair(const ExpansionPair& pair, std::ostream& out);

// Tokens with optional annotation layers consumed by extraction and sampling.
struct TaggedText {
  std::string id;
  TokenSeq tokens;
  std::optional<std::vector<std::string>> pos;
  std::optional<std::vector<Span>> np_chunks;
  std::optional<std::vector<Span>> entities;
  std::optional<std::vector<Span>> hq_modifiers;

  bool operator==(const TaggedText&) const = default;
};

void validate(const TaggedText& text);
TaggedText tagged_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const TaggedText& text);
std::vector<TaggedText> read_tagged(std::istream& in);

// Calls `fn(json, line_no)` for each non-blank line. Malformed JSON throws
// ParseError with the line number; ValidationErrors from `fn` are rethrown
// with the line number prepended.
void for_each_json_line(std::istream& in,
                        const std::function<void(const nlohmann::ordered_json&, std::size_t)>& fn);

}  // namespace expanse
