#include "iclmine/metrics.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/io.hpp"
#include "iclmine/text.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string_view>
#include <unordered_map>

namespace iclmine::metrics {

void validate(const ChrfConfig& config)
{
    if (config.char_ngram_max < 1 || config.word_ngram_max < 1) {
        throw ConfigError("chrF++ n-gram maxima must be at least 1");
    }
    if (!(config.beta > 0.0)) {
        throw ConfigError("chrF++ beta must be positive");
    }
}

std::string to_string(Smoothing smoothing)
{
    switch (smoothing) {
    case Smoothing::none:
        return "none";
    case Smoothing::epsilon:
        return "epsilon";
    case Smoothing::exp:
        return "exp";
    }
    return "epsilon";
}

Smoothing smoothing_from_string(std::string_view s)
{
    if (s == "none") {
        return Smoothing::none;
    }
    if (s == "epsilon") {
        return Smoothing::epsilon;
    }
    if (s == "exp") {
        return Smoothing::exp;
    }
    throw ConfigError("unknown BLEU smoothing '" + std::string(s) + "' (expected none, epsilon or exp)");
}

void validate(const BleuConfig& config)
{
    if (config.max_ngram < 1) {
        throw ConfigError("BLEU max_ngram must be at least 1");
    }
    if (config.tokenizer == TokenizerKind::subword && config.subword_vocab.empty()) {
        throw ConfigError("subword BLEU needs a subword_vocab file");
    }
}

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const
{
    std::vector<std::string> tokens;
    const auto normalized = text::normalize_spaces(text);
    std::size_t start = 0;
    while (start < normalized.size()) {
        auto end = normalized.find(' ', start);
        if (end == std::string::npos) {
            end = normalized.size();
        }
        tokens.emplace_back(normalized.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

std::vector<std::string> CharTokenizer::tokenize(std::string_view text) const
{
    std::vector<std::string> tokens;
    for (char32_t cp : text::to_u32(text::normalize_spaces(text))) {
        if (!text::is_space(cp)) {
            tokens.push_back(text::to_utf8(std::u32string(1, cp)));
        }
    }
    return tokens;
}

namespace {

constexpr char32_t kWordBoundary = U'▁';

}  // namespace

SubwordTokenizer::SubwordTokenizer(std::vector<std::string> pieces)
{
    for (const auto& piece : pieces) {
        auto cps = text::to_u32(text::nfc(piece));
        if (cps.empty()) {
            continue;
        }
        max_len_ = std::max(max_len_, cps.size());
        pieces_.insert(std::move(cps));
    }
    if (pieces_.empty()) {
        throw ConfigError("subword vocabulary has no pieces");
    }
}

std::vector<std::string> SubwordTokenizer::tokenize(std::string_view text) const
{
    std::vector<std::string> tokens;
    for (const auto& word : WhitespaceTokenizer{}.tokenize(text)) {
        std::u32string cps(1, kWordBoundary);
        cps += text::to_u32(word);
        std::size_t i = 0;
        while (i < cps.size()) {
            std::size_t len = std::min(max_len_, cps.size() - i);
            for (; len > 1; --len) {
                if (pieces_.count(cps.substr(i, len)) != 0) {
                    break;
                }
            }
            // len == 1 either matched a piece or is an uncovered code point; the
            // bare boundary marker is only kept when the inventory has it.
            if (len == 1 && cps[i] == kWordBoundary && pieces_.count(cps.substr(i, 1)) == 0) {
                ++i;
                continue;
            }
            tokens.push_back(text::to_utf8(cps.substr(i, len)));
            i += len;
        }
    }
    return tokens;
}

SubwordTokenizer load_subword_tokenizer(const std::filesystem::path& vocab_path)
{
    std::string content;
    try {
        content = io::read_file(vocab_path);
    } catch (const DataError& e) {
        throw ConfigError(std::string("subword_vocab: ") + e.what());
    }
    std::vector<std::string> pieces;
    for (const auto& line : text::split_lines(content)) {
        // Tolerate "piece<TAB>score" vocab dumps.
        auto piece = text::trim(line.substr(0, line.find('\t')));
        if (!piece.empty()) {
            pieces.push_back(std::move(piece));
        }
    }
    return SubwordTokenizer(std::move(pieces));
}

std::unique_ptr<Tokenizer> make_tokenizer(const BleuConfig& config)
{
    validate(config);
    switch (config.tokenizer) {
    case TokenizerKind::whitespace:
        return std::make_unique<WhitespaceTokenizer>();
    case TokenizerKind::character:
        return std::make_unique<CharTokenizer>();
    case TokenizerKind::subword:
        return std::make_unique<SubwordTokenizer>(load_subword_tokenizer(config.subword_vocab));
    }
    throw ConfigError("unknown BLEU tokenizer");
}

namespace {

void check_lengths(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references)
{
    if (hypotheses.size() != references.size()) {
        throw DataError(fmt::format("metric inputs differ in length: {} hypotheses vs {} references",
                                    hypotheses.size(), references.size()));
    }
}

template <typename Seq>
using NgramCounts = std::map<Seq, std::size_t>;

template <typename Seq>
NgramCounts<Seq> count_ngrams(const Seq& items, std::size_t n)
{
    NgramCounts<Seq> counts;
    if (items.size() < n) {
        return counts;
    }
    for (std::size_t i = 0; i + n <= items.size(); ++i) {
        ++counts[Seq(items.begin() + static_cast<std::ptrdiff_t>(i),
                     items.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

struct OrderStats {
    std::size_t hyp = 0;
    std::size_t ref = 0;
    std::size_t match = 0;
};

template <typename Seq>
void accumulate(OrderStats& stats, const NgramCounts<Seq>& hyp, const NgramCounts<Seq>& ref)
{
    for (const auto& [gram, count] : hyp) {
        stats.hyp += count;
        if (auto it = ref.find(gram); it != ref.end()) {
            stats.match += std::min(count, it->second);
        }
    }
    for (const auto& [gram, count] : ref) {
        stats.ref += count;
    }
}

bool is_ascii_punct(char32_t cp)
{
    return cp < 0x80 && std::string_view(R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)").find(static_cast<char>(cp)) !=
                            std::string_view::npos;
}

/// Words for the chrF++ word n-grams: one trailing, or else one leading, ASCII
/// punctuation mark is split off each multi-character word.
std::vector<std::u32string> chrf_words(const std::string& normalized)
{
    std::vector<std::u32string> words;
    for (const auto& w : WhitespaceTokenizer{}.tokenize(normalized)) {
        auto cps = text::to_u32(w);
        if (cps.size() == 1) {
            words.push_back(std::move(cps));
        } else if (is_ascii_punct(cps.back())) {
            words.push_back(cps.substr(0, cps.size() - 1));
            words.push_back(cps.substr(cps.size() - 1));
        } else if (is_ascii_punct(cps.front())) {
            words.push_back(cps.substr(0, 1));
            words.push_back(cps.substr(1));
        } else {
            words.push_back(std::move(cps));
        }
    }
    return words;
}

std::u32string chrf_chars(const std::string& normalized)
{
    std::u32string out;
    for (char32_t cp : text::to_u32(normalized)) {
        if (!text::is_space(cp)) {
            out.push_back(cp);
        }
    }
    return out;
}

}  // namespace

double chrf_pp(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
               const ChrfConfig& config)
{
    validate(config);
    check_lengths(hypotheses, references);
    const auto char_orders = static_cast<std::size_t>(config.char_ngram_max);
    const auto word_orders = static_cast<std::size_t>(config.word_ngram_max);
    std::vector<OrderStats> stats(char_orders + word_orders);
    bool any_text = false;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const auto hyp = text::normalize_spaces(hypotheses[s]);
        const auto ref = text::normalize_spaces(references[s]);
        any_text = any_text || !hyp.empty() || !ref.empty();
        const auto hyp_chars = chrf_chars(hyp);
        const auto ref_chars = chrf_chars(ref);
        for (std::size_t n = 1; n <= char_orders; ++n) {
            accumulate(stats[n - 1], count_ngrams(hyp_chars, n), count_ngrams(ref_chars, n));
        }
        const auto hyp_words = chrf_words(hyp);
        const auto ref_words = chrf_words(ref);
        for (std::size_t n = 1; n <= word_orders; ++n) {
            accumulate(stats[char_orders + n - 1], count_ngrams(hyp_words, n), count_ngrams(ref_words, n));
        }
    }
    if (!any_text) {
        throw DataError("chrF++: hypotheses and references are both empty");
    }

    // Precision and recall are averaged over the orders both sides can fill.
    double precision = 0.0;
    double recall = 0.0;
    std::size_t effective = 0;
    for (const auto& o : stats) {
        if (o.hyp > 0) {
            precision += static_cast<double>(o.match) / static_cast<double>(o.hyp);
        }
        if (o.ref > 0) {
            recall += static_cast<double>(o.match) / static_cast<double>(o.ref);
        }
        if (o.hyp > 0 && o.ref > 0) {
            ++effective;
        }
    }
    if (effective == 0) {
        return 0.0;
    }
    precision /= static_cast<double>(effective);
    recall /= static_cast<double>(effective);
    if (precision + recall == 0.0) {
        return 0.0;
    }
    const double b2 = config.beta * config.beta;
    const double f = (1.0 + b2) * precision * recall / (b2 * precision + recall);
    return std::clamp(100.0 * f, 0.0, 100.0);
}

double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
            const BleuConfig& config)
{
    const auto tokenizer = make_tokenizer(config);
    return bleu(hypotheses, references, config, *tokenizer);
}

double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
            const BleuConfig& config, const Tokenizer& tokenizer)
{
    validate(config);
    check_lengths(hypotheses, references);
    if (hypotheses.empty()) {
        throw DataError("BLEU: empty hypothesis corpus");
    }
    const auto max_n = static_cast<std::size_t>(config.max_ngram);
    std::vector<OrderStats> stats(max_n);
    std::size_t sys_len = 0;
    std::size_t ref_len = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const auto hyp = tokenizer.tokenize(hypotheses[s]);
        const auto ref = tokenizer.tokenize(references[s]);
        sys_len += hyp.size();
        ref_len += ref.size();
        for (std::size_t n = 1; n <= max_n; ++n) {
            accumulate(stats[n - 1], count_ngrams(hyp, n), count_ngrams(ref, n));
        }
    }
    if (sys_len == 0) {
        return 0.0;
    }

    // Orders the hypotheses are too short to contain are left out of the mean.
    double log_sum = 0.0;
    std::size_t effective = 0;
    double exp_factor = 1.0;
    for (const auto& o : stats) {
        if (o.hyp == 0) {
            continue;
        }
        ++effective;
        const auto total = static_cast<double>(o.hyp);
        double p = 0.0;
        if (o.match > 0) {
            p = static_cast<double>(o.match) / total;
        } else if (config.smoothing == Smoothing::epsilon) {
            p = 0.1 / total;
        } else if (config.smoothing == Smoothing::exp) {
            exp_factor *= 2.0;
            p = 1.0 / (exp_factor * total);
        } else {
            return 0.0;
        }
        log_sum += std::log(p);
    }
    const double bp = sys_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(sys_len))
                                        : 1.0;
    const double score = 100.0 * bp * std::exp(log_sum / static_cast<double>(effective));
    return std::clamp(score, 0.0, 100.0);
}

EvalReport evaluate(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                    const MetricConfigs& configs)
{
    EvalReport report;
    report.chrf_pp = chrf_pp(hypotheses, references, configs.chrf);
    report.bleu = bleu(hypotheses, references, configs.bleu);
    report.sentence_count = hypotheses.size();
    return report;
}

EvalReport evaluate_corpus(const std::filesystem::path& hyp_path, const std::filesystem::path& ref_path,
                           const MetricConfigs& configs)
{
    const auto hyps = text::split_lines(io::read_file(hyp_path));
    const auto refs = text::split_lines(io::read_file(ref_path));
    if (hyps.size() != refs.size()) {
        throw DataError(fmt::format("alignment mismatch: {} has {} lines, {} has {}", hyp_path.string(), hyps.size(),
                                    ref_path.string(), refs.size()));
    }
    return evaluate(hyps, refs, configs);
}

std::string to_json(const EvalReport& report)
{
    const nlohmann::json j = {
        {"source", report.source},
        {"target", report.target},
        {"system", report.system},
        {"chrf_pp", report.chrf_pp},
        {"bleu", report.bleu},
        {"sentence_count", report.sentence_count},
    };
    return j.dump(2);
}

std::string format_row(const EvalReport& report)
{
    return fmt::format("{}→{}  {:.2f}/{:.2f}", report.source, report.target, report.chrf_pp, report.bleu);
}

}  // namespace iclmine::metrics
