#include "expanse/hearst.hpp"

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>

#include "expanse/error.hpp"
#include "expanse/text_util.hpp"

namespace expanse::hearst {

namespace {

Element np(Element::Kind kind) { return {kind, {}, false}; }

Element words(std::vector<TokenSeq> alternatives, bool optional = false) {
  return {Element::Kind::words, std::move(alternatives), optional};
}

constexpr auto kSup = Element::Kind::np_sup;
constexpr auto kSub = Element::Kind::np_sub;

std::string_view kind_name(Element::Kind kind) {
  switch (kind) {
    case Element::Kind::np_sup: return "sup";
    case Element::Kind::np_sub: return "sub";
    case Element::Kind::words: break;
  }
  return "words";
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

bool is_noun_tag(const std::string& tag) { return starts_with(tag, "NN"); }

struct ChunkLayers {
  std::vector<Span> base;
  std::vector<Span> merged;
};

ChunkLayers naive_layers(const TaggedText& tagged) {
  if (!tagged.pos) throw ValidationError("pos required for naive chunking");
  const auto& tags = *tagged.pos;
  const std::size_t n = tags.size();
  ChunkLayers out;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    if (tags[j] == "DT" || tags[j] == "PRP$") ++j;
    while (j < n && (starts_with(tags[j], "JJ") || tags[j] == "CD" || is_noun_tag(tags[j]))) ++j;
    std::size_t last_noun = j;
    for (std::size_t k = j; k > i; --k) {
      if (is_noun_tag(tags[k - 1])) {
        last_noun = k - 1;
        break;
      }
    }
    if (last_noun == j) {
      ++i;
      continue;
    }
    out.base.push_back({i, last_noun + 1});
    i = last_noun + 1;
  }
  for (std::size_t k = 0; k + 1 < out.base.size(); ++k) {
    const Span a = out.base[k];
    const Span b = out.base[k + 1];
    if (a.end + 1 == b.start && to_lower_ascii(tagged.tokens[a.end]) == "of") {
      out.merged.push_back({a.start, b.end});
      ++k;
    }
  }
  return out;
}

class Matcher {
 public:
  Matcher(const TaggedText& tagged, std::vector<Span> chunks) : tokens_(tagged.tokens), chunks_(std::move(chunks)) {
    lowered_.reserve(tokens_.size());
    for (const auto& t : tokens_) lowered_.push_back(to_lower_ascii(t));
  }

  std::optional<HearstMatch> match_at(const HearstPattern& p, std::size_t pos) {
    bind_.assign(p.elements.size(), std::nullopt);
    if (!match_from(p, 0, pos)) return std::nullopt;
    HearstMatch m;
    m.pattern_id = p.pattern_id;
    std::optional<Span> modifier;
    for (std::size_t e = 0; e < p.elements.size(); ++e) {
      if (!bind_[e]) continue;
      const Span s = *bind_[e];
      if (p.elements[e].kind == kSup) m.hypernym_span = s;
      if (p.elements[e].kind == kSub) m.hyponym_spans.push_back(s);
      if (e >= p.modifier_begin && e < p.modifier_end) {
        modifier = modifier ? Span{std::min(modifier->start, s.start), std::max(modifier->end, s.end)} : s;
      }
    }
    m.modifier_span = *modifier;
    if (p.elements.back().kind == kSub) extend_tail(m.hyponym_spans);
    return m;
  }

 private:
  // Chunks starting at pos, or (when allowed) the part of a chunk from pos on;
  // longest first.
  std::vector<Span> nps_at(std::size_t pos, bool allow_suffix) const {
    std::vector<Span> out;
    for (const auto& c : chunks_) {
      if (c.start == pos || (allow_suffix && c.start < pos && pos < c.end)) out.push_back({pos, c.end});
    }
    std::sort(out.begin(), out.end(), [](const Span& a, const Span& b) { return a.end > b.end; });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::optional<std::size_t> words_at(const TokenSeq& alt, std::size_t pos) const {
    if (pos + alt.size() > tokens_.size()) return std::nullopt;
    for (std::size_t k = 0; k < alt.size(); ++k) {
      if (lowered_[pos + k] != to_lower_ascii(alt[k])) return std::nullopt;
    }
    return pos + alt.size();
  }

  bool match_from(const HearstPattern& p, std::size_t e, std::size_t pos) {
    if (e == p.elements.size()) return true;
    const Element& el = p.elements[e];
    if (el.kind == Element::Kind::words) {
      for (const auto& alt : el.alternatives) {
        if (auto end = words_at(alt, pos)) {
          bind_[e] = Span{pos, *end};
          if (match_from(p, e + 1, *end)) return true;
        }
      }
    } else {
      for (const auto& span : nps_at(pos, e != 0)) {
        bind_[e] = span;
        if (match_from(p, e + 1, span.end)) return true;
      }
    }
    bind_[e] = std::nullopt;
    return el.optional && match_from(p, e + 1, pos);
  }

  // ("," | and | or | ", and" | ", or") NP, repeated; stops after a conjunction.
  void extend_tail(std::vector<Span>& hyponyms) const {
    std::size_t pos = hyponyms.back().end;
    while (pos < tokens_.size()) {
      std::size_t q = pos;
      bool consumed = false;
      if (lowered_[q] == ",") {
        ++q;
        consumed = true;
      }
      bool conj = false;
      if (q < tokens_.size() && (lowered_[q] == "and" || lowered_[q] == "or")) {
        ++q;
        conj = true;
        consumed = true;
      }
      if (!consumed) return;
      auto next = nps_at(q, false);
      if (next.empty()) return;
      hyponyms.push_back(next.front());
      pos = next.front().end;
      if (conj) return;
    }
  }

  const TokenSeq& tokens_;
  std::vector<Span> chunks_;
  std::vector<std::string> lowered_;
  std::vector<std::optional<Span>> bind_;
};

}  // namespace

void validate(const HearstPattern& p) {
  const auto fail = [&](const std::string& why) {
    throw ValidationError("pattern " + p.pattern_id + ": " + why);
  };
  if (p.pattern_id.empty()) throw ValidationError("pattern_id must be non-empty");
  if (p.modifier_begin >= p.modifier_end || p.modifier_end > p.elements.size()) fail("bad modifier range");
  std::size_t sups = 0;
  std::size_t subs = 0;
  for (std::size_t e = 0; e < p.elements.size(); ++e) {
    const auto& el = p.elements[e];
    const bool inside = e >= p.modifier_begin && e < p.modifier_end;
    switch (el.kind) {
      case Element::Kind::np_sup:
        ++sups;
        if (!inside) fail("NP_SUP outside the modifier");
        if (el.optional) fail("NP elements cannot be optional");
        break;
      case Element::Kind::np_sub:
        ++subs;
        if (inside) fail("NP_SUB inside the modifier");
        if (el.optional) fail("NP elements cannot be optional");
        break;
      case Element::Kind::words:
        if (!inside) fail("clue words outside the modifier");
        if (el.alternatives.empty()) fail("word element without alternatives");
        for (const auto& alt : el.alternatives) {
          if (alt.empty()) fail("empty word alternative");
        }
        break;
    }
  }
  if (sups != 1) fail("needs exactly one NP_SUP");
  if (subs == 0) fail("needs at least one NP_SUB");
}

std::vector<HearstPattern> builtin_patterns() {
  const Element comma = words({{","}});
  const Element opt_comma = words({{","}}, true);
  const Element known = words({{"known"}, {"famous"}});
  std::vector<HearstPattern> out = {
      {"hearst-1",
       {np(kSub), words({{"is"}}), words({{"a"}, {"an"}}), words({{"part"}, {"field"}, {"kind"}, {"type"}}),
        words({{"of"}}), np(kSup), words({{"that"}})},
       1, 7},
      {"hearst-2",
       {np(kSub), words({{"and"}, {"or"}}), words({{"some"}, {"any"}}, true), words({{"other"}}), np(kSup)}, 1, 5},
      {"hearst-3", {np(kSup), opt_comma, words({{"especially"}, {"particularly"}, {"notably"}}), np(kSub)}, 0, 3},
      {"hearst-4", {np(kSub), comma, known, words({{"as"}}), np(kSup)}, 1, 5},
      {"hearst-5", {np(kSup), opt_comma, words({{"such", "as"}, {"including"}}), np(kSub)}, 0, 3},
      {"hearst-6", {words({{"such"}}), np(kSup), words({{"as"}}), np(kSub)}, 0, 3},
      {"hearst-7",
       {np(kSup), opt_comma, words({{"e.g."}, {"i.e."}, {"for", "instance"}, {"for", "example"}}), np(kSub)},
       0, 3},
      {"hearst-8", {known, words({{"as"}}), np(kSup), comma, np(kSub)}, 0, 4},
  };
  for (const auto& p : out) validate(p);
  return out;
}

nlohmann::ordered_json to_json(const HearstPattern& p) {
  nlohmann::ordered_json elements = nlohmann::ordered_json::array();
  for (const auto& el : p.elements) {
    nlohmann::ordered_json j;
    if (el.kind == Element::Kind::words) {
      j["words"] = el.alternatives;
    } else {
      j["np"] = kind_name(el.kind);
    }
    if (el.optional) j["optional"] = true;
    elements.push_back(std::move(j));
  }
  nlohmann::ordered_json j;
  j["pattern_id"] = p.pattern_id;
  j["template"] = std::move(elements);
  j["modifier"] = {p.modifier_begin, p.modifier_end};
  return j;
}

HearstPattern pattern_from_json(const nlohmann::ordered_json& j) {
  HearstPattern p;
  try {
    p.pattern_id = j.at("pattern_id").get<std::string>();
    for (const auto& e : j.at("template")) {
      Element el;
      if (e.contains("np")) {
        const auto which = e.at("np").get<std::string>();
        if (which == "sup") {
          el.kind = kSup;
        } else if (which == "sub") {
          el.kind = kSub;
        } else {
          throw ValidationError("template: np must be \"sup\" or \"sub\"");
        }
      } else {
        el.kind = Element::Kind::words;
        el.alternatives = e.at("words").get<std::vector<TokenSeq>>();
      }
      el.optional = e.value("optional", false);
      p.elements.push_back(std::move(el));
    }
    const auto& range = j.at("modifier");
    if (!range.is_array() || range.size() != 2) throw ValidationError("modifier must be [begin, end]");
    p.modifier_begin = range.at(0).get<std::size_t>();
    p.modifier_end = range.at(1).get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pattern: ") + e.what());
  }
  validate(p);
  return p;
}

std::vector<HearstPattern> read_patterns(std::istream& in) {
  std::vector<HearstPattern> out;
  for_each_json_line(in, [&](const nlohmann::ordered_json& j, std::size_t) { out.push_back(pattern_from_json(j)); });
  return out;
}

void write_patterns(const std::vector<HearstPattern>& patterns, std::ostream& out) {
  for (const auto& p : patterns) out << to_json(p).dump() << '\n';
}

std::vector<Span> chunk_naive(const TaggedText& tagged) {
  const auto layers = naive_layers(tagged);
  std::vector<Span> out = layers.merged;
  for (const auto& b : layers.base) {
    const bool absorbed = std::any_of(layers.merged.begin(), layers.merged.end(),
                                      [&](const Span& m) { return m.start <= b.start && b.end <= m.end; });
    if (!absorbed) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<HearstMatch> find_matches(const TaggedText& tagged, const std::vector<HearstPattern>& patterns) {
  std::vector<Span> chunks;
  if (tagged.np_chunks) {
    chunks = *tagged.np_chunks;
  } else {
    auto layers = naive_layers(tagged);
    chunks = std::move(layers.base);
    chunks.insert(chunks.end(), layers.merged.begin(), layers.merged.end());
  }
  Matcher matcher(tagged, std::move(chunks));
  std::vector<HearstMatch> out;
  std::size_t pos = 0;
  while (pos < tagged.tokens.size()) {
    std::optional<HearstMatch> hit;
    for (const auto& p : patterns) {
      if ((hit = matcher.match_at(p, pos))) break;
    }
    if (hit) {
      pos = std::max(pos + 1, hit->modifier_span.end);
      out.push_back(std::move(*hit));
    } else {
      ++pos;
    }
  }
  return out;
}

ExpansionPair match_to_pair(const TaggedText& tagged, const HearstMatch& match, std::string id, Language language) {
  if (match.modifier_span.end > tagged.tokens.size() || match.modifier_span.start >= match.modifier_span.end) {
    throw ValidationError("match: modifier span out of range");
  }
  TokenSeq x = remove_spans(tagged.tokens, {match.modifier_span});
  if (x.empty()) throw ValidationError("empty source");
  return make_pair(std::move(id), language, std::move(x), tagged.tokens, {match.modifier_span}, Provenance::IAR);
}

}  // namespace expanse::hearst
