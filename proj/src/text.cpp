#include "iclmine/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace iclmine::text {

std::u32string to_u32(std::string_view utf8)
{
    std::u32string out;
    out.reserve(utf8.size());
    const auto* bytes = reinterpret_cast<const uint8_t*>(utf8.data());
    const auto length = static_cast<int32_t>(utf8.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 cp = 0;
        U8_NEXT(bytes, i, length, cp);
        out.push_back(cp < 0 ? U'�' : static_cast<char32_t>(cp));
    }
    return out;
}

std::string to_utf8(std::u32string_view cps)
{
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        uint8_t buf[4];
        int32_t n = 0;
        UBool error = false;
        U8_APPEND(buf, n, 4, static_cast<UChar32>(cp), error);
        if (error) {
            n = 0;
            U8_APPEND_UNSAFE(buf, n, 0xFFFD);
        }
        out.append(reinterpret_cast<const char*>(buf), static_cast<size_t>(n));
    }
    return out;
}

bool is_space(char32_t cp)
{
    return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

bool is_word_char(char32_t cp)
{
    const auto mask = U_GET_GC_MASK(static_cast<UChar32>(cp));
    return (mask & (U_GC_L_MASK | U_GC_M_MASK | U_GC_ND_MASK)) != 0;
}

namespace {

const icu::Normalizer2& nfc_instance()
{
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *n;
}

icu::UnicodeString normalize(const icu::UnicodeString& in)
{
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString out = nfc_instance().normalize(in, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("NFC normalization failed");
    }
    return out;
}

std::string to_std(const icu::UnicodeString& u)
{
    std::string out;
    u.toUTF8String(out);
    return out;
}

}  // namespace

std::string nfc(std::string_view s)
{
    return to_std(normalize(icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())))));
}

std::string normalize_word(std::string_view s)
{
    auto u = normalize(icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size()))));
    u.foldCase(U_FOLD_CASE_DEFAULT);
    return to_std(normalize(u));
}

bool has_whitespace(std::string_view s)
{
    for (char32_t cp : to_u32(s)) {
        if (is_space(cp)) {
            return true;
        }
    }
    return false;
}

std::string trim(std::string_view s)
{
    const auto cps = to_u32(s);
    size_t begin = 0;
    size_t end = cps.size();
    while (begin < end && is_space(cps[begin])) {
        ++begin;
    }
    while (end > begin && is_space(cps[end - 1])) {
        --end;
    }
    return to_utf8(std::u32string_view(cps).substr(begin, end - begin));
}

std::string normalize_spaces(std::string_view s)
{
    std::u32string out;
    bool pending_space = false;
    for (char32_t cp : to_u32(s)) {
        if (is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return nfc(to_utf8(out));
}

std::vector<Token> tokenize_mixed(std::string_view s)
{
    std::vector<Token> tokens;
    std::u32string current;
    TokenKind current_kind = TokenKind::other;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back({to_utf8(current), current_kind});
            current.clear();
        }
    };
    for (char32_t cp : to_u32(s)) {
        if (is_space(cp)) {
            flush();
            continue;
        }
        const auto kind = is_word_char(cp) ? TokenKind::word : TokenKind::other;
        if (kind != current_kind) {
            flush();
            current_kind = kind;
        }
        current.push_back(cp);
    }
    flush();
    return tokens;
}

std::vector<std::string> word_tokens(std::string_view s, bool fold)
{
    std::vector<std::string> out;
    for (auto& token : tokenize_mixed(s)) {
        if (token.kind == TokenKind::word) {
            out.push_back(fold ? normalize_word(token.text) : std::move(token.text));
        }
    }
    return out;
}

bool is_numeric(std::string_view s)
{
    const auto cps = to_u32(s);
    if (cps.empty()) {
        return false;
    }
    for (char32_t cp : cps) {
        if (u_charType(static_cast<UChar32>(cp)) != U_DECIMAL_DIGIT_NUMBER) {
            return false;
        }
    }
    return true;
}

std::string extract_word(std::string_view completion)
{
    const auto cps = to_u32(completion);
    size_t begin = 0;
    while (begin < cps.size() && is_space(cps[begin])) {
        ++begin;
    }
    size_t end = begin;
    while (end < cps.size() && !is_space(cps[end])) {
        ++end;
    }
    while (begin < end && !is_word_char(cps[begin])) {
        ++begin;
    }
    while (end > begin && !is_word_char(cps[end - 1])) {
        --end;
    }
    return to_utf8(std::u32string_view(cps).substr(begin, end - begin));
}

std::vector<std::string> split_lines(std::string_view content)
{
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < content.size()) {
        size_t nl = content.find('\n', start);
        if (nl == std::string_view::npos) {
            nl = content.size();
        }
        std::string_view line = content.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

}  // namespace iclmine::text
