#include "expanse/template.hpp"

#include <charconv>
#include <optional>

#include "expanse/error.hpp"

namespace expanse {

std::size_t Template::slot_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += std::holds_alternative<Slot>(s);
  return n;
}

std::vector<TokenSeq> Template::literal_runs() const {
  std::vector<TokenSeq> out;
  for (const auto& s : segments) {
    if (const auto* lit = std::get_if<Literal>(&s)) out.push_back(lit->tokens);
  }
  return out;
}

std::size_t Template::literal_token_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) {
    if (const auto* lit = std::get_if<Literal>(&s)) n += lit->tokens.size();
  }
  return n;
}

void check_mask_format(std::string_view mask_format) {
  const auto first = mask_format.find("{i}");
  if (first == std::string_view::npos || mask_format.find("{i}", first + 1) != std::string_view::npos) {
    throw ValidationError("mask_format must contain exactly one \"{i}\" placeholder");
  }
  if (mask_format.find_first_of(" \t\n\r") != std::string_view::npos) {
    throw ValidationError("mask_format must not contain whitespace");
  }
}

std::string render_slot(std::string_view mask_format, std::size_t index) {
  const auto at = mask_format.find("{i}");
  std::string out(mask_format.substr(0, at));
  out += std::to_string(index);
  out += mask_format.substr(at + 3);
  return out;
}

TokenSeq Template::render(std::string_view mask_format) const {
  TokenSeq out;
  for (const auto& s : segments) {
    if (const auto* lit = std::get_if<Literal>(&s)) {
      out.insert(out.end(), lit->tokens.begin(), lit->tokens.end());
    } else {
      out.push_back(render_slot(mask_format, std::get<Slot>(s).index));
    }
  }
  return out;
}

InfillTemplatePair make_dual(const std::vector<LabeledRun>& runs) {
  InfillTemplatePair out;
  std::size_t input_slots = 0;
  std::size_t target_slots = 0;
  auto append = [](Template& t, const TokenSeq& tokens) {
    if (!t.segments.empty()) {
      if (auto* lit = std::get_if<Literal>(&t.segments.back())) {
        lit->tokens.insert(lit->tokens.end(), tokens.begin(), tokens.end());
        return;
      }
    }
    t.segments.emplace_back(Literal{tokens});
  };
  std::optional<bool> last_side;
  for (const auto& run : runs) {
    if (run.tokens.empty()) continue;
    if (run.in_input) {
      append(out.input, run.tokens);
      if (last_side != true) out.target.segments.emplace_back(Slot{++target_slots});
    } else {
      append(out.target, run.tokens);
      if (last_side != false) out.input.segments.emplace_back(Slot{++input_slots});
    }
    last_side = run.in_input;
  }
  // Nothing to fill: the target is empty rather than a lone slot.
  if (input_slots == 0) out.target.segments.clear();
  return out;
}

TokenSeq splice(const Template& tmpl, const std::vector<TokenSeq>& runs) {
  if (runs.size() != tmpl.slot_count()) {
    throw ValidationError("template has " + std::to_string(tmpl.slot_count()) + " slots but " +
                          std::to_string(runs.size()) + " fill runs");
  }
  TokenSeq out;
  for (const auto& s : tmpl.segments) {
    if (const auto* lit = std::get_if<Literal>(&s)) {
      out.insert(out.end(), lit->tokens.begin(), lit->tokens.end());
    } else {
      const auto& fill = runs[std::get<Slot>(s).index - 1];
      out.insert(out.end(), fill.begin(), fill.end());
    }
  }
  return out;
}

TokenSeq reconstruct(const InfillTemplatePair& pair) {
  return splice(pair.input, pair.target.literal_runs());
}

TokenSeq reconstruct(const InfillTemplatePair& pair, std::string_view null_token) {
  auto runs = pair.target.literal_runs();
  for (auto& r : runs) {
    if (r.size() == 1 && r.front() == null_token) r.clear();
  }
  return splice(pair.input, runs);
}

namespace {

void validate_numbering(const Template& t, const char* which) {
  std::size_t expected = 1;
  for (const auto& s : t.segments) {
    if (const auto* slot = std::get_if<Slot>(&s)) {
      if (slot->index != expected) {
        throw ValidationError(std::string(which) + ": slot indices must run 1..K in order");
      }
      ++expected;
    } else if (std::get<Literal>(s).tokens.empty()) {
      throw ValidationError(std::string(which) + ": empty literal segment");
    }
  }
}

}  // namespace

void validate(const InfillTemplatePair& pair) {
  validate_numbering(pair.input, "input");
  validate_numbering(pair.target, "target");
}

nlohmann::ordered_json to_json(const Template& tmpl, std::string_view mask_format) {
  return tmpl.render(mask_format);
}

Template template_from_tokens(const TokenSeq& tokens, std::string_view mask_format) {
  const auto at = mask_format.find("{i}");
  const auto prefix = mask_format.substr(0, at);
  const auto suffix = mask_format.substr(at + 3);
  Template out;
  for (const auto& tok : tokens) {
    std::string_view t = tok;
    bool is_slot = false;
    std::size_t index = 0;
    if (t.size() > prefix.size() + suffix.size() && t.substr(0, prefix.size()) == prefix &&
        t.substr(t.size() - suffix.size()) == suffix) {
      auto digits = t.substr(prefix.size(), t.size() - prefix.size() - suffix.size());
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      is_slot = ec == std::errc() && ptr == digits.data() + digits.size() && index > 0;
    }
    if (is_slot) {
      out.segments.emplace_back(Slot{index});
    } else if (!out.segments.empty() && std::holds_alternative<Literal>(out.segments.back())) {
      std::get<Literal>(out.segments.back()).tokens.push_back(tok);
    } else {
      out.segments.emplace_back(Literal{{tok}});
    }
  }
  return out;
}

}  // namespace expanse
