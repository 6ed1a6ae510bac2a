#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "expanse/corpus.hpp"

namespace expanse::hearst {

// One position of a pattern template. NP elements bind a noun-phrase chunk;
// word elements bind one of `alternatives` (each a token sequence, compared
// lowercased).
struct Element {
  enum class Kind { np_sup, np_sub, words };

  Kind kind = Kind::words;
  std::vector<TokenSeq> alternatives;
  bool optional = false;

  bool operator==(const Element&) const = default;
};

struct HearstPattern {
  std::string pattern_id;
  std::vector<Element> elements;
  // Half-open element range whose matched tokens form the modifier.
  std::size_t modifier_begin = 0;
  std::size_t modifier_end = 0;

  bool operator==(const HearstPattern&) const = default;
};

struct HearstMatch {
  std::string pattern_id;
  Span hypernym_span;
  std::vector<Span> hyponym_spans;
  Span modifier_span;

  bool operator==(const HearstMatch&) const = default;
};

// Exactly one NP_SUP, at least one NP_SUB, a non-empty modifier range holding
// NP_SUP and every word element but no NP_SUB.
void validate(const HearstPattern& pattern);

std::vector<HearstPattern> builtin_patterns();

nlohmann::ordered_json to_json(const HearstPattern& pattern);
HearstPattern pattern_from_json(const nlohmann::ordered_json& j);
std::vector<HearstPattern> read_patterns(std::istream& in);
void write_patterns(const std::vector<HearstPattern>& patterns, std::ostream& out);

// Base NPs are (DT|PRP$)? (JJ*|CD|NN*)* cut back to the last NN* tag, taken
// leftmost-longest. "NP of NP" then merges once; a merged chunk replaces its
// two parts in the result. Throws ValidationError without POS tags.
std::vector<Span> chunk_naive(const TaggedText& tagged);

// Left-to-right scan; at each token the patterns are tried in order and the
// first match wins. Scanning resumes after the match's modifier. Patterns
// ending in NP_SUB absorb list tails such as ", beef , and lamb".
std::vector<HearstMatch> find_matches(const TaggedText& tagged, const std::vector<HearstPattern>& patterns);

// Y = tokens, X = Y without the modifier. Throws ValidationError("empty source").
ExpansionPair match_to_pair(const TaggedText& tagged, const HearstMatch& match, std::string id,
                            Language language = Language::en);

}  // namespace expanse::hearst
