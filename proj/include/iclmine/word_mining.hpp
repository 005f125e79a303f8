#pragma once

#include "iclmine/backends.hpp"
#include "iclmine/corpus.hpp"
#include "iclmine/prompts.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iclmine::word_mining {

enum class Direction { source_to_target, target_to_source };
enum class Provenance { zero_shot, k_shot };

std::string to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct WordPair {
    std::string source_word;
    std::string target_word;
    std::optional<double> similarity;
    Provenance provenance = Provenance::zero_shot;

    bool operator==(const WordPair&) const = default;
};

struct Candidate {
    std::string word;
    double score = 0.0;

    bool operator==(const Candidate&) const = default;
};

/// Query word -> vocabulary-filtered candidate translations, kept in query
/// order with candidates sorted by descending sequence score.
class CandidatePool {
public:
    explicit CandidatePool(Direction direction) : direction_(direction) {}

    struct Entry {
        std::string word;
        std::vector<Candidate> candidates;
    };

    /// Replaces any previous entry for the word. Empty candidate lists are ignored.
    void set(const std::string& word, std::vector<Candidate> candidates);

    Direction direction() const noexcept { return direction_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    const std::vector<Candidate>* find(std::string_view word) const;
    bool contains(std::string_view word, std::string_view candidate) const;
    std::size_t pair_count() const;
    bool empty() const noexcept { return entries_.empty(); }

private:
    Direction direction_;
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct MiningConfig {
    int n = 10;
    int k_wp = 10;
    double temperature = 1.0;
    std::int64_t seed = 0;
    int max_new_tokens = 8;
    int concurrency = 1;
    prompts::PromptTemplates templates;
};

void validate(const MiningConfig& config);

using SimFn = std::function<double(std::string_view, std::string_view)>;

/// Forward pass: n sampled completions per source word, cut at whitespace
/// and kept only when they normalize into the target vocabulary. With shots,
/// each prompt is the k-shot word template instead of the zero-shot one.
CandidatePool mine_forward(const corpus::Vocabulary& vocab_src,
                           const corpus::Vocabulary& vocab_tgt,
                           const MiningConfig& config,
                           backends::LanguageModel& llm,
                           const std::vector<WordPair>& shots = {});

/// Backward pass: every distinct target word in the forward pool is
/// translated once, greedily, and filtered against the source vocabulary.
CandidatePool mine_backward(const CandidatePool& forward,
                            const corpus::Vocabulary& vocab_src,
                            const corpus::Vocabulary& vocab_tgt,
                            const MiningConfig& config,
                            backends::LanguageModel& llm,
                            const std::vector<WordPair>& shots = {});

/// Keep (s, t) when t is a forward candidate of s and s back-translates from t.
std::vector<WordPair> consistency_filter(const CandidatePool& forward,
                                         const CandidatePool& backward,
                                         Provenance provenance = Provenance::zero_shot);

/// Annotate with sim(s, t), stable sort by (similarity desc, source frequency
/// rank asc) and keep the first k_wp.
std::vector<WordPair> rank_and_select(std::vector<WordPair> pairs,
                                      const SimFn& sim,
                                      int k_wp,
                                      const corpus::Vocabulary& vocab_src);

/// One zero-shot round: forward, backward, filter, rank.
std::vector<WordPair> mine_zero_shot(const corpus::Vocabulary& vocab_src,
                                     const corpus::Vocabulary& vocab_tgt,
                                     const MiningConfig& config,
                                     backends::LanguageModel& llm,
                                     const SimFn& sim);

/// The same round with every prompt prefixed by the seed pairs.
std::vector<WordPair> refine_kshot(const std::vector<WordPair>& seed_pairs,
                                   const corpus::Vocabulary& vocab_src,
                                   const corpus::Vocabulary& vocab_tgt,
                                   const MiningConfig& config,
                                   backends::LanguageModel& llm,
                                   const SimFn& sim);

struct MiningResult {
    std::vector<WordPair> zero_shot;
    std::vector<WordPair> refined;
};

/// Zero-shot mining followed by one k-shot refinement. If refinement keeps
/// nothing the zero-shot pairs are returned as the refined list.
MiningResult mine_words(const corpus::Vocabulary& vocab_src,
                        const corpus::Vocabulary& vocab_tgt,
                        const MiningConfig& config,
                        backends::LanguageModel& llm,
                        const SimFn& sim);

/// TSV: source_word, target_word, similarity, provenance. No header line.
std::string to_tsv(const std::vector<WordPair>& pairs);
std::vector<WordPair> from_tsv(std::string_view content);
std::vector<WordPair> read_lexicon(const std::filesystem::path& path);

}  // namespace iclmine::word_mining
