#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace iclmine::metrics {

struct ChrfConfig {
    int char_ngram_max = 6;
    int word_ngram_max = 2;
    double beta = 2.0;
};

void validate(const ChrfConfig& config);

enum class Smoothing { none, epsilon, exp };

std::string to_string(Smoothing smoothing);
Smoothing smoothing_from_string(std::string_view s);

enum class TokenizerKind { whitespace, character, subword };

struct BleuConfig {
    int max_ngram = 4;
    Smoothing smoothing = Smoothing::epsilon;
    TokenizerKind tokenizer = TokenizerKind::whitespace;
    /// One subword piece per line; required when tokenizer is subword.
    std::filesystem::path subword_vocab;
};

void validate(const BleuConfig& config);

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::string id() const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string id() const override { return "whitespace"; }
};

/// One token per non-space code point.
class CharTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string id() const override { return "char"; }
};

/// Greedy longest-match segmentation over a fixed piece inventory. Each
/// whitespace-separated word is prefixed with U+2581 before matching, and a
/// code point no piece covers becomes a token of its own.
class SubwordTokenizer final : public Tokenizer {
public:
    explicit SubwordTokenizer(std::vector<std::string> pieces);
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string id() const override { return "subword"; }

private:
    std::unordered_set<std::u32string> pieces_;
    std::size_t max_len_ = 1;
};

SubwordTokenizer load_subword_tokenizer(const std::filesystem::path& vocab_path);

/// Throws ConfigError when a subword tokenizer has no readable vocabulary.
std::unique_ptr<Tokenizer> make_tokenizer(const BleuConfig& config);

/// Corpus chrF++ in [0, 100]. Throws DataError on a length mismatch or when
/// neither side contains any non-space text.
double chrf_pp(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
               const ChrfConfig& config = {});

/// Corpus BLEU in [0, 100] over the configured tokenization.
double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
            const BleuConfig& config = {});
double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
            const BleuConfig& config, const Tokenizer& tokenizer);

struct MetricConfigs {
    ChrfConfig chrf;
    BleuConfig bleu;
};

struct EvalReport {
    std::string source;
    std::string target;
    std::string system;
    double chrf_pp = 0.0;
    double bleu = 0.0;
    std::size_t sentence_count = 0;
};

EvalReport evaluate(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                    const MetricConfigs& configs);

/// Reads two line-aligned files; a length mismatch is a DataError.
EvalReport evaluate_corpus(const std::filesystem::path& hyp_path, const std::filesystem::path& ref_path,
                           const MetricConfigs& configs);

std::string to_json(const EvalReport& report);
/// "src→tgt  chrF++/spBLEU", scores with two decimals.
std::string format_row(const EvalReport& report);

}  // namespace iclmine::metrics
