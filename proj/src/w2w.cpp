#include "iclmine/w2w.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/parallel.hpp"
#include "iclmine/text.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <set>

namespace iclmine::w2w {

double W2wCorpus::copy_through_ratio() const
{
    std::size_t copied = 0;
    std::size_t words = 0;
    for (const auto& s : stats) {
        copied += s.copied_through;
        words += s.copied_through + s.translated;
    }
    return words == 0 ? 0.0 : static_cast<double>(copied) / static_cast<double>(words);
}

WordTranslator::WordTranslator(std::vector<word_mining::WordPair> shots,
                               corpus::LanguageSpec source,
                               corpus::LanguageSpec target,
                               W2wSettings settings,
                               backends::LanguageModel& llm)
    : shots_(std::move(shots)),
      source_(std::move(source)),
      target_(std::move(target)),
      settings_(std::move(settings)),
      llm_(llm)
{
    if (shots_.empty()) {
        throw DataError("word-by-word translation needs at least one mined word pair");
    }
    for (const auto& p : shots_) {
        examples_.emplace_back(p.source_word, p.target_word);
    }
    prompts::validate(settings_.templates);
}

WordTranslator::Result WordTranslator::translate(const std::string& word)
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = memo_.find(word); it != memo_.end()) {
            return it->second;
        }
    }
    auto result = query(word);
    std::lock_guard lock(mutex_);
    return memo_.try_emplace(word, std::move(result)).first->second;
}

WordTranslator::Result WordTranslator::query(const std::string& word)
{
    backends::GenerationRequest request;
    request.prompt = prompts::word_kshot(settings_.templates, source_, target_, examples_, word);
    request.num_samples = 1;
    request.mode = backends::Greedy{};
    request.stop = backends::StopCondition::whitespace();
    request.max_new_tokens = settings_.max_new_tokens;
    std::vector<backends::ScoredCompletion> completions;
    try {
        completions = llm_.generate(request);
    } catch (const BackendError& e) {
        spdlog::warn("word translation of '{}' failed ({}); copying it through", word, e.what());
        return {word, true};
    }
    if (completions.empty()) {
        return {word, true};
    }
    // Keep exactly one word token so renderings stay aligned with their sources.
    const auto words = text::word_tokens(text::extract_word(completions.front().text), false);
    if (words.empty()) {
        return {word, true};
    }
    return {words.front(), false};
}

std::string translate_word_icl(const std::string& word,
                               const std::vector<word_mining::WordPair>& shots,
                               const corpus::LanguageSpec& source,
                               const corpus::LanguageSpec& target,
                               backends::LanguageModel& llm,
                               const W2wSettings& settings)
{
    if (word.empty() || text::has_whitespace(word)) {
        throw DataError("translate_word_icl: '" + word + "' is not a single word");
    }
    WordTranslator translator(shots, source, target, settings, llm);
    return translator.translate(word).text;
}

namespace {

bool needs_translation(const text::Token& token)
{
    return token.kind == text::TokenKind::word && !text::is_numeric(token.text);
}

}  // namespace

W2wCorpus build_w2w(const std::vector<std::string>& sentences, WordTranslator& translator)
{
    if (sentences.empty()) {
        throw DataError("build_w2w: no sentences");
    }
    std::vector<std::vector<text::Token>> tokenized;
    tokenized.reserve(sentences.size());
    std::vector<std::string> distinct;
    std::set<std::string> seen;
    for (const auto& sentence : sentences) {
        tokenized.push_back(text::tokenize_mixed(sentence));
        for (const auto& token : tokenized.back()) {
            if (needs_translation(token) && seen.insert(token.text).second) {
                distinct.push_back(token.text);
            }
        }
    }
    parallel_for(distinct.size(), translator.settings().concurrency,
                 [&](std::size_t i) { translator.translate(distinct[i]); });

    W2wCorpus corpus;
    corpus.shots_used = translator.shots();
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        SentenceStats stats;
        std::string rendering;
        for (const auto& token : tokenized[i]) {
            std::string piece;
            if (needs_translation(token)) {
                auto result = translator.translate(token.text);
                (result.copied_through ? stats.copied_through : stats.translated) += 1;
                piece = std::move(result.text);
            } else {
                ++stats.passthrough;
                piece = token.text;
            }
            if (!rendering.empty()) {
                rendering += ' ';
            }
            rendering += piece;
        }
        if (rendering.empty()) {
            // Whitespace-only input cannot occur for loaded corpora; keep the row aligned anyway.
            rendering = sentences[i];
        }
        corpus.pairs.emplace_back(sentences[i], std::move(rendering));
        corpus.stats.push_back(stats);
    }
    spdlog::info("word-by-word corpus: {} sentences, copy-through ratio {:.3f}", corpus.size(),
                 corpus.copy_through_ratio());
    return corpus;
}

std::string to_jsonl(const W2wCorpus& corpus)
{
    std::string out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const nlohmann::json record = {
            {"source", corpus.pairs[i].first},
            {"w2w", corpus.pairs[i].second},
            {"copied_through", corpus.stats[i].copied_through},
        };
        out += record.dump();
        out += '\n';
    }
    return out;
}

W2wCorpus from_jsonl(std::string_view content)
{
    W2wCorpus corpus;
    const auto lines = text::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        try {
            const auto record = nlohmann::json::parse(lines[i]);
            auto source = record.at("source").get<std::string>();
            SentenceStats stats;
            stats.copied_through = record.at("copied_through").get<std::size_t>();
            std::size_t words = 0;
            for (const auto& token : text::tokenize_mixed(source)) {
                (needs_translation(token) ? words : stats.passthrough) += 1;
            }
            stats.translated = words >= stats.copied_through ? words - stats.copied_through : 0;
            corpus.pairs.emplace_back(std::move(source), record.at("w2w").get<std::string>());
            corpus.stats.push_back(stats);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("w2w record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return corpus;
}

}  // namespace iclmine::w2w
