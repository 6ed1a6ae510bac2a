#include "expanse/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "expanse/error.hpp"

namespace expanse {

using nlohmann::ordered_json;

std::string_view to_string(Language lang) {
  return lang == Language::en ? "en" : "zh";
}

std::string_view to_string(Provenance prov) {
  switch (prov) {
    case Provenance::NSC: return "NSC";
    case Provenance::CTP: return "CTP";
    case Provenance::IAR: return "IAR";
    case Provenance::MMP: return "MMP";
    case Provenance::MODEL: return "MODEL";
    case Provenance::REF: return "REF";
    case Provenance::UNKNOWN: break;
  }
  return "UNKNOWN";
}

Language parse_language(std::string_view s) {
  if (s == "en") return Language::en;
  if (s == "zh") return Language::zh;
  throw ValidationError("language: expected \"en\" or \"zh\", got \"" + std::string(s) + "\"");
}

Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::NSC, Provenance::CTP, Provenance::IAR, Provenance::MMP,
                 Provenance::MODEL, Provenance::REF, Provenance::UNKNOWN}) {
    if (to_string(p) == s) return p;
  }
  throw ValidationError("provenance: unknown value \"" + std::string(s) + "\"");
}

bool ExpansionPair::spans_populated() const {
  return !modifier_spans.empty() || source == expansion;
}

std::vector<Span> merge_adjacent(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end());
  std::vector<Span> out;
  for (const auto& s : spans) {
    if (s.start >= s.end) throw ValidationError("modifier_spans: empty or inverted span");
    if (!out.empty() && s.start < out.back().end) throw ValidationError("modifier_spans: overlapping spans");
    if (!out.empty() && s.start == out.back().end) {
      out.back().end = s.end;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

TokenSeq remove_spans(const TokenSeq& tokens, const std::vector<Span>& spans) {
  TokenSeq out;
  out.reserve(tokens.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    while (next < spans.size() && spans[next].end <= i) ++next;
    if (next < spans.size() && spans[next].start <= i && i < spans[next].end) continue;
    out.push_back(tokens[i]);
  }
  return out;
}

namespace {

void check_tokens(const TokenSeq& tokens, const char* field) {
  for (const auto& t : tokens) {
    if (t.empty()) throw ValidationError(std::string(field) + ": empty token");
    if (t.find_first_of(" \t\n\r") != std::string::npos) {
      throw ValidationError(std::string(field) + ": token contains whitespace");
    }
  }
}

void check_spans(const std::vector<Span>& spans, std::size_t size, const char* field, bool disjoint) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start >= s.end || s.end > size) throw ValidationError(std::string(field) + ": span out of range");
    if (disjoint && i > 0 && s.start < spans[i - 1].end) {
      throw ValidationError(std::string(field) + ": overlapping spans");
    }
  }
}

}  // namespace

void validate(const ExpansionPair& pair) {
  check_tokens(pair.source, "source");
  check_tokens(pair.expansion, "expansion");
  const auto& spans = pair.modifier_spans;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].start >= spans[i].end || spans[i].end > pair.expansion.size()) {
      throw ValidationError("modifier_spans: span out of range");
    }
    if (i > 0) {
      if (spans[i].start < spans[i - 1].end) throw ValidationError("modifier_spans: overlapping spans");
      if (spans[i].start == spans[i - 1].end) throw ValidationError("modifier_spans: adjacent spans");
    }
  }
  if (!spans.empty() && remove_spans(pair.expansion, spans) != pair.source) {
    throw ValidationError("modifier_spans: removing spans from expansion does not yield source");
  }
}

ExpansionPair make_pair(std::string id, Language language, TokenSeq source, TokenSeq expansion,
                        std::vector<Span> modifier_spans, Provenance provenance) {
  ExpansionPair p;
  p.id = std::move(id);
  p.language = language;
  p.source = std::move(source);
  p.expansion = std::move(expansion);
  p.modifier_spans = merge_adjacent(std::move(modifier_spans));
  p.provenance = provenance;
  validate(p);
  return p;
}

std::vector<TokenSeq> surface_modifiers(const ExpansionPair& pair) {
  std::vector<TokenSeq> out;
  out.reserve(pair.modifier_spans.size());
  for (const auto& s : pair.modifier_spans) {
    out.emplace_back(pair.expansion.begin() + static_cast<std::ptrdiff_t>(s.start),
                     pair.expansion.begin() + static_cast<std::ptrdiff_t>(s.end));
  }
  return out;
}

std::string join(const TokenSeq& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

TokenSeq split_ws(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

namespace {

ordered_json spans_to_json(const std::vector<Span>& spans) {
  auto arr = ordered_json::array();
  for (const auto& s : spans) arr.push_back({s.start, s.end});
  return arr;
}

std::vector<Span> spans_from_json(const ordered_json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(std::string(field) + ": expected array of [start,end]");
  std::vector<Span> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned()) {
      throw ValidationError(std::string(field) + ": expected [start,end] pairs of non-negative integers");
    }
    out.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
  }
  return out;
}

TokenSeq tokens_from_json(const ordered_json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(std::string(field) + ": expected array of strings");
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_string()) throw ValidationError(std::string(field) + ": expected array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

const ordered_json& require(const ordered_json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw ValidationError(std::string(field) + ": missing");
  return *it;
}

std::string require_string(const ordered_json& j, const char* field) {
  const auto& v = require(j, field);
  if (!v.is_string()) throw ValidationError(std::string(field) + ": expected string");
  return v.get<std::string>();
}

}  // namespace

ordered_json to_json(const ExpansionPair& pair) {
  ordered_json j;
  j["id"] = pair.id;
  j["language"] = to_string(pair.language);
  j["source"] = pair.source;
  j["expansion"] = pair.expansion;
  j["modifier_spans"] = spans_to_json(pair.modifier_spans);
  j["provenance"] = to_string(pair.provenance);
  for (const auto& [k, v] : pair.extra.items()) j[k] = v;
  return j;
}

ExpansionPair pair_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ValidationError("record: expected JSON object");
  ExpansionPair p;
  p.id = require_string(j, "id");
  p.language = parse_language(require_string(j, "language"));
  p.source = tokens_from_json(require(j, "source"), "source");
  p.expansion = tokens_from_json(require(j, "expansion"), "expansion");
  if (auto it = j.find("modifier_spans"); it != j.end() && !it->is_null()) {
    p.modifier_spans = merge_adjacent(spans_from_json(*it, "modifier_spans"));
  }
  p.provenance = j.contains("provenance") ? parse_provenance(require_string(j, "provenance"))
                                          : Provenance::UNKNOWN;
  static const char* known[] = {"id", "language", "source", "expansion", "modifier_spans", "provenance"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(known), std::end(known), k) == std::end(known)) p.extra[k] = v;
  }
  validate(p);
  return p;
}

void for_each_json_line(std::istream& in,
                        const std::function<void(const ordered_json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
      fn(j, line_no);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<ExpansionPair> read_pairs(std::istream& in) {
  std::vector<ExpansionPair> out;
  for_each_json_line(in, [&](const ordered_json& j, std::size_t) { out.push_back(pair_from_json(j)); });
  return out;
}

void write_pair(const ExpansionPair& pair, std::ostream& out) {
  out << to_json(pair).dump() << '\n';
}

void write_pairs(const std::vector<ExpansionPair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) write_pair(p, out);
  out.flush();
  if (!out) throw Error("write failed");
}

void validate(const TaggedText& text) {
  check_tokens(text.tokens, "tokens");
  const auto n = text.tokens.size();
  if (text.pos && text.pos->size() != n) throw ValidationError("pos: expected one tag per token");
  if (text.np_chunks) check_spans(*text.np_chunks, n, "np_chunks", false);
  if (text.entities) {
    auto sorted = *text.entities;
    std::sort(sorted.begin(), sorted.end());
    check_spans(sorted, n, "entities", true);
  }
  if (text.hq_modifiers) {
    auto sorted = *text.hq_modifiers;
    std::sort(sorted.begin(), sorted.end());
    check_spans(sorted, n, "hq_modifiers", true);
  }
}

TaggedText tagged_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ValidationError("record: expected JSON object");
  TaggedText t;
  t.id = j.contains("id") ? require_string(j, "id") : std::string();
  t.tokens = tokens_from_json(require(j, "tokens"), "tokens");
  auto opt_spans = [&](const char* field) -> std::optional<std::vector<Span>> {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return spans_from_json(*it, field);
  };
  if (auto it = j.find("pos"); it != j.end() && !it->is_null()) t.pos = tokens_from_json(*it, "pos");
  t.np_chunks = opt_spans("np_chunks");
  t.entities = opt_spans("entities");
  t.hq_modifiers = opt_spans("hq_modifiers");
  validate(t);
  return t;
}

ordered_json to_json(const TaggedText& text) {
  ordered_json j;
  j["id"] = text.id;
  j["tokens"] = text.tokens;
  if (text.pos) j["pos"] = *text.pos;
  if (text.np_chunks) j["np_chunks"] = spans_to_json(*text.np_chunks);
  if (text.entities) j["entities"] = spans_to_json(*text.entities);
  if (text.hq_modifiers) j["hq_modifiers"] = spans_to_json(*text.hq_modifiers);
  return j;
}

std::vector<TaggedText> read_tagged(std::istream& in) {
  std::vector<TaggedText> out;
  for_each_json_line(in, [&](const ordered_json& j, std::size_t) { out.push_back(tagged_from_json(j)); });
  return out;
}

}  // namespace expanse
