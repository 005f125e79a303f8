#include "iclmine/text.hpp"

#include <doctest.h>

using namespace iclmine::text;

namespace {

std::vector<std::string> texts(const std::vector<Token>& tokens)
{
    std::vector<std::string> out;
    for (const auto& t : tokens) {
        out.push_back(t.text);
    }
    return out;
}

}  // namespace

TEST_SUITE("text")
{
    TEST_CASE("tokenize_mixed separates word runs from punctuation")
    {
        const auto tokens = tokenize_mixed("gato negro.");
        CHECK(texts(tokens) == std::vector<std::string>{"gato", "negro", "."});
        CHECK(tokens[0].kind == TokenKind::word);
        CHECK(tokens[2].kind == TokenKind::other);

        CHECK(texts(tokenize_mixed("  \"¡Hola!\" dijo, 42 veces…")) ==
              std::vector<std::string>{"\"¡", "Hola", "!\"", "dijo", ",", "42", "veces", "…"});
        CHECK(tokenize_mixed("").empty());
        CHECK(tokenize_mixed(" \t\n").empty());
    }

    TEST_CASE("combining marks stay inside the word")
    {
        // "e" + U+0301 COMBINING ACUTE ACCENT
        const auto tokens = tokenize_mixed("cafe\xCC\x81!");
        REQUIRE(tokens.size() == 2);
        CHECK(tokens[0].text == "cafe\xCC\x81");
        CHECK(tokens[1].text == "!");
    }

    TEST_CASE("normalize_word applies NFC and case folding")
    {
        CHECK(normalize_word("Cafe\xCC\x81") == "caf\xC3\xA9");
        CHECK(normalize_word("STRASSE") == "strasse");
        CHECK(normalize_word("Straße") == "strasse");
        CHECK(normalize_word("日本") == "日本");
    }

    TEST_CASE("normalize_spaces collapses runs and trims")
    {
        CHECK(normalize_spaces("  a \t b\n\nc  ") == "a b c");
        CHECK(normalize_spaces("") == "");
        CHECK(trim("\t x y \r\n") == "x y");
        CHECK(has_whitespace("a b"));
        CHECK_FALSE(has_whitespace("ab"));
    }

    TEST_CASE("word_tokens drops punctuation and optionally folds")
    {
        CHECK(word_tokens("The cat, the HAT.", true) == std::vector<std::string>{"the", "cat", "the", "hat"});
        CHECK(word_tokens("The cat, the HAT.", false) == std::vector<std::string>{"The", "cat", "the", "HAT"});
    }

    TEST_CASE("is_numeric")
    {
        CHECK(is_numeric("2024"));
        CHECK(is_numeric("٣٤"));
        CHECK_FALSE(is_numeric("12a"));
        CHECK_FALSE(is_numeric(""));
    }

    TEST_CASE("extract_word reduces a completion to one bare word")
    {
        CHECK(extract_word(" cat\nSpanish:") == "cat");
        CHECK(extract_word("\"cat\",") == "cat");
        CHECK(extract_word("  chat noir") == "chat");
        CHECK(extract_word("...") == "");
        CHECK(extract_word("") == "");
        CHECK(extract_word("l'homme") == "l'homme");
    }

    TEST_CASE("split_lines accepts LF and CRLF")
    {
        CHECK(split_lines("a\r\nb\nc") == std::vector<std::string>{"a", "b", "c"});
        CHECK(split_lines("a\n\nb\n") == std::vector<std::string>{"a", "", "b"});
        CHECK(split_lines("").empty());
    }

    TEST_CASE("utf8 round trip")
    {
        const std::string s = "añ日😀";
        CHECK(to_u32(s).size() == 4);
        CHECK(to_utf8(to_u32(s)) == s);
    }
}
