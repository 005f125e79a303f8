#pragma once

#include "iclmine/backends.hpp"
#include "iclmine/corpus.hpp"
#include "iclmine/prompts.hpp"
#include "iclmine/word_mining.hpp"

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace iclmine::w2w {

struct SentenceStats {
    std::size_t translated = 0;
    /// Word tokens whose translation failed or came back empty.
    std::size_t copied_through = 0;
    /// Punctuation and numerals, copied by rule.
    std::size_t passthrough = 0;

    bool operator==(const SentenceStats&) const = default;
};

struct W2wCorpus {
    /// (original L_s sentence, word-by-word L_t rendering)
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<word_mining::WordPair> shots_used;
    std::vector<SentenceStats> stats;

    std::size_t size() const noexcept { return pairs.size(); }
    /// Copied-through word tokens over all word tokens.
    double copy_through_ratio() const;
};

struct W2wSettings {
    prompts::PromptTemplates templates;
    int max_new_tokens = 8;
    int concurrency = 1;
};

/// Translates single words with the mined pairs as in-context examples.
/// Results are memoized for the lifetime of the translator; failures copy the
/// input word through.
class WordTranslator {
public:
    WordTranslator(std::vector<word_mining::WordPair> shots,
                   corpus::LanguageSpec source,
                   corpus::LanguageSpec target,
                   W2wSettings settings,
                   backends::LanguageModel& llm);

    struct Result {
        std::string text;
        bool copied_through = false;
    };

    Result translate(const std::string& word);

    const std::vector<word_mining::WordPair>& shots() const noexcept { return shots_; }
    const W2wSettings& settings() const noexcept { return settings_; }

private:
    Result query(const std::string& word);

    std::vector<word_mining::WordPair> shots_;
    std::vector<prompts::Example> examples_;
    corpus::LanguageSpec source_;
    corpus::LanguageSpec target_;
    W2wSettings settings_;
    backends::LanguageModel& llm_;
    std::mutex mutex_;
    std::map<std::string, Result> memo_;
};

/// Convenience wrapper over a one-off WordTranslator.
std::string translate_word_icl(const std::string& word,
                               const std::vector<word_mining::WordPair>& shots,
                               const corpus::LanguageSpec& source,
                               const corpus::LanguageSpec& target,
                               backends::LanguageModel& llm,
                               const W2wSettings& settings = {});

/// Tokenize each sentence, translate word tokens, copy punctuation and
/// numerals through, and space-join the result.
W2wCorpus build_w2w(const std::vector<std::string>& sentences, WordTranslator& translator);

/// JSONL {source, w2w, copied_through}.
std::string to_jsonl(const W2wCorpus& corpus);
W2wCorpus from_jsonl(std::string_view content);

}  // namespace iclmine::w2w
