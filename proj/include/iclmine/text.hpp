#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace iclmine::text {

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view cps);

bool is_space(char32_t cp);
/// Letters, combining marks and decimal digits.
bool is_word_char(char32_t cp);

std::string nfc(std::string_view s);
/// NFC followed by default Unicode case folding. Scripts without case pass through.
std::string normalize_word(std::string_view s);

bool has_whitespace(std::string_view s);
std::string trim(std::string_view s);
/// Strip, collapse internal whitespace runs to a single space, then NFC.
std::string normalize_spaces(std::string_view s);

enum class TokenKind { word, other };

struct Token {
    std::string text;
    TokenKind kind;
};

/// Splits on whitespace, then separates each chunk into maximal runs of word
/// characters and runs of everything else. "gato negro." -> [gato, negro, .]
std::vector<Token> tokenize_mixed(std::string_view s);

/// Word-character runs only, punctuation dropped. Optionally case-folded.
std::vector<std::string> word_tokens(std::string_view s, bool fold);

/// True when every code point is a decimal digit.
bool is_numeric(std::string_view s);

/// Reduce a raw single-word completion to a bare word: leading whitespace is
/// skipped, the text is cut at the next whitespace and surrounding
/// punctuation/quotes are stripped. Returns "" when nothing word-like remains.
std::string extract_word(std::string_view completion);

std::vector<std::string> split_lines(std::string_view content);

}  // namespace iclmine::text
