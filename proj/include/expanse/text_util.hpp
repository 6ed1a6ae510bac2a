#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "expanse/corpus.hpp"

namespace expanse {

// Unicode general category P* (connector, dash, open, close, initial, final,
// other punctuation). Invalid UTF-8 bytes count as non-punctuation.
bool is_punct_codepoint(char32_t cp);

// True when every code point of the token is punctuation.
bool is_punct_token(std::string_view token);

// Longest run of consecutive punctuation code points across the token
// sequence; a token boundary does not break a run, a non-punctuation code
// point does.
std::size_t max_punct_run(const TokenSeq& tokens);

std::string to_lower_ascii(std::string_view s);

using StopwordSet = std::set<std::string>;

StopwordSet default_stopwords(Language language);

// One word per line; blank lines and lines starting with '#' are skipped.
StopwordSet load_stopwords(const std::filesystem::path& path);

// Not a stopword (case-insensitive for ASCII) and not pure punctuation.
bool is_content_token(const std::string& token, const StopwordSet& stopwords);

}  // namespace expanse
