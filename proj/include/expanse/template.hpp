#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "expanse/corpus.hpp"

namespace expanse {

struct Literal {
  TokenSeq tokens;
  bool operator==(const Literal&) const = default;
};

// Numbered mask slot; indices within one template run 1..K left to right.
struct Slot {
  std::size_t index = 0;
  bool operator==(const Slot&) const = default;
};

using Segment = std::variant<Literal, Slot>;

// An ordered mix of literal token runs and mask slots.
struct Template {
  std::vector<Segment> segments;

  std::size_t slot_count() const;
  std::vector<TokenSeq> literal_runs() const;
  std::size_t literal_token_count() const;

  // Slot i renders as mask_format with "{i}" replaced by i.
  TokenSeq render(std::string_view mask_format) const;

  bool operator==(const Template&) const = default;
};

// An infilling pair. For the dual templates built here, input slot k is filled
// by the k-th literal run of target and target slot k by the k-th literal run
// of input; both splices yield the same full sentence.
struct InfillTemplatePair {
  Template input;
  Template target;

  bool operator==(const InfillTemplatePair&) const = default;
};

inline constexpr std::string_view kDefaultMaskFormat = "<M{i}>";
inline constexpr std::string_view kDefaultNullToken = "<null>";

// Throws ValidationError unless the format contains exactly one "{i}".
void check_mask_format(std::string_view mask_format);
std::string render_slot(std::string_view mask_format, std::size_t index);

// A labeled partition of a sentence into runs. Runs marked `in_input` become
// input literals (and target slots); the others become target literals (and
// input slots). Consecutive runs with the same marking are coalesced.
struct LabeledRun {
  TokenSeq tokens;
  bool in_input = true;
};
InfillTemplatePair make_dual(const std::vector<LabeledRun>& runs);

// Fills the slots of `tmpl` with `runs` in order. Throws ValidationError when
// the run count differs from the slot count.
TokenSeq splice(const Template& tmpl, const std::vector<TokenSeq>& runs);

// Input slots filled from target literal runs.
TokenSeq reconstruct(const InfillTemplatePair& pair);
// Same, treating target runs that equal [null_token] as empty.
TokenSeq reconstruct(const InfillTemplatePair& pair, std::string_view null_token);

// Checks slot numbering (1..K consecutive in each template).
void validate(const InfillTemplatePair& pair);

nlohmann::ordered_json to_json(const Template& tmpl, std::string_view mask_format);
Template template_from_tokens(const TokenSeq& tokens, std::string_view mask_format);

}  // namespace expanse
