#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace iclmine::corpus {

/// A language as "xxx_Scrp" (ISO 639-3 + script, FLORES style) plus the
/// natural-language name that appears in prompts.
class LanguageSpec {
public:
    /// Throws ConfigError when the code is malformed or the name is empty.
    LanguageSpec(std::string code, std::string display_name);

    const std::string& code() const noexcept { return code_; }
    const std::string& display_name() const noexcept { return display_name_; }

    bool operator==(const LanguageSpec&) const = default;

private:
    std::string code_;
    std::string display_name_;
};

/// Resolve a display name from the built-in FLORES table unless an override is given.
LanguageSpec make_language(const std::string& code, const std::optional<std::string>& name_override = std::nullopt);
std::optional<std::string> builtin_display_name(std::string_view code);

/// Frequency-ordered word list. Membership and rank lookups use the
/// normalized (NFC + case-folded) form.
class Vocabulary {
public:
    Vocabulary(LanguageSpec language, std::vector<std::string> words, std::string source_path = {});

    const LanguageSpec& language() const noexcept { return language_; }
    const std::vector<std::string>& words() const noexcept { return words_; }
    const std::string& source_path() const noexcept { return source_path_; }
    std::size_t size() const noexcept { return words_.size(); }

    bool contains(std::string_view word) const;
    /// 0-based frequency rank of the normalized word.
    std::optional<std::size_t> rank(std::string_view word) const;
    /// The stored (normalized) entry for a word, if present.
    std::optional<std::string> canonical(std::string_view word) const;

    Vocabulary truncated(std::size_t max_size) const;

    bool operator==(const Vocabulary& other) const
    {
        return language_ == other.language_ && words_ == other.words_;
    }

private:
    LanguageSpec language_;
    std::vector<std::string> words_;
    std::string source_path_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct MonolingualCorpus {
    LanguageSpec language;
    std::vector<std::string> sentences;

    bool operator==(const MonolingualCorpus&) const = default;
};

struct ParallelCorpus {
    LanguageSpec source_lang;
    LanguageSpec target_lang;
    std::vector<std::pair<std::string, std::string>> pairs;

    std::vector<std::string> sources() const;
    std::vector<std::string> targets() const;

    bool operator==(const ParallelCorpus&) const = default;
};

/// Loads at most max_size distinct normalized tokens. Lines with internal
/// whitespace are rejected with a warning.
Vocabulary load_vocabulary(const std::filesystem::path& path, const LanguageSpec& language, std::size_t max_size);

/// Blank lines are dropped and their 1-based line numbers logged.
MonolingualCorpus load_monolingual(const std::filesystem::path& path, const LanguageSpec& language);

/// Throws DataError "alignment mismatch" when line counts differ. A blank
/// line on either side drops the pair.
ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path,
                             const LanguageSpec& source_lang,
                             const LanguageSpec& target_lang);

/// One entry per line, LF terminated.
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);
void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
void write_monolingual(const std::filesystem::path& path, const MonolingualCorpus& corpus);
void write_parallel(const std::filesystem::path& source_path,
                    const std::filesystem::path& target_path,
                    const ParallelCorpus& corpus);

}  // namespace iclmine::corpus
