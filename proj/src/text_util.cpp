#include "expanse/text_util.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <fstream>

#include "expanse/error.hpp"

namespace expanse {

namespace {

// Calls fn(cp) for each code point; malformed sequences yield a negative cp.
template <typename Fn>
void for_each_codepoint(std::string_view s, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    fn(c);
  }
}

// Common English function words.
constexpr const char* kEnglishStopwords[] = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could",
    "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has",
    "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if",
    "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor",
    "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
    "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs",
    "them", "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who",
    "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves", "'s", "'m",
    "'re", "'ve", "'ll", "'d", "n't",
};

constexpr const char* kChineseStopwords[] = {
    "的", "了", "在", "是", "我", "有", "和", "就", "不", "人", "都", "一", "一个", "上", "也", "很",
    "到", "说", "要", "去", "你", "会", "着", "没有", "看", "好", "自己", "这", "那", "他", "她", "它",
    "们", "我们", "你们", "他们", "地", "得", "之", "与", "及", "而", "或", "被", "把", "让", "从", "对",
    "为", "以", "于", "但", "并", "等", "啊", "吧", "呢", "吗", "呀", "嘛", "这个", "那个", "这些", "那些",
};

}  // namespace

bool is_punct_codepoint(char32_t cp) {
  return u_ispunct(static_cast<UChar32>(cp)) != 0;
}

bool is_punct_token(std::string_view token) {
  if (token.empty()) return false;
  bool all = true;
  for_each_codepoint(token, [&](UChar32 c) {
    if (c < 0 || !u_ispunct(c)) all = false;
  });
  return all;
}

std::size_t max_punct_run(const TokenSeq& tokens) {
  std::size_t run = 0;
  std::size_t best = 0;
  for (const auto& t : tokens) {
    for_each_codepoint(t, [&](UChar32 c) {
      if (c >= 0 && u_ispunct(c)) {
        best = std::max(best, ++run);
      } else {
        run = 0;
      }
    });
  }
  return best;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

StopwordSet default_stopwords(Language language) {
  if (language == Language::en) return {std::begin(kEnglishStopwords), std::end(kEnglishStopwords)};
  return {std::begin(kChineseStopwords), std::end(kChineseStopwords)};
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword file " + path.string());
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    auto words = split_ws(line);
    if (words.empty() || words.front().front() == '#') continue;
    for (auto& w : words) out.insert(to_lower_ascii(w));
  }
  return out;
}

bool is_content_token(const std::string& token, const StopwordSet& stopwords) {
  if (is_punct_token(token)) return false;
  return stopwords.count(to_lower_ascii(token)) == 0;
}

}  // namespace expanse
