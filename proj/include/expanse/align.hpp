#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "expanse/corpus.hpp"
#include "expanse/template.hpp"

namespace expanse::align {

// Monotone embedding of X into Y.
struct Alignment {
  std::vector<std::size_t> map;  // map[i] is the Y index of X token i, strictly increasing
  std::vector<Span> slots;       // maximal runs of unmatched Y indices

  bool operator==(const Alignment&) const = default;
};

// labels[i]: insert before X token i; labels[|X|]: insert at the end (</S>).
struct LocationLabels {
  std::vector<bool> labels;

  std::size_t count() const;
  bool operator==(const LocationLabels&) const = default;
};

// True iff x is an in-order subsequence of y (exact token equality).
bool check_fidelity(const TokenSeq& x, const TokenSeq& y);

// Among all monotone embeddings, one with the fewest insertion gaps; ties go
// to the lexicographically smallest map. O(|x|·|y|) time and space.
// Throws ValidationError("not a subsequence") when fidelity fails.
Alignment align_min_gaps(const TokenSeq& x, const TokenSeq& y);

// Slots of an arbitrary strictly increasing map over a Y of length y_size.
std::vector<Span> gaps_of(const std::vector<std::size_t>& map, std::size_t y_size);

ExpansionPair pair_from_alignment(const TokenSeq& x, const TokenSeq& y, std::string id, Language language,
                                  Provenance provenance);

// Returns the pair with spans recovered by alignment when it has none.
ExpansionPair canonicalize(ExpansionPair pair);

LocationLabels location_labels(const ExpansionPair& pair);

// Slot before each token and at both ends; target carries the modifier or
// `null_token` for every slot.
InfillTemplatePair joint_format(const ExpansionPair& pair, std::string_view null_token = kDefaultNullToken);

// X with a slot at each true location label; target holds the modifier runs.
InfillTemplatePair pipelined_format(const ExpansionPair& pair);

}  // namespace expanse::align
