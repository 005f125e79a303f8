#pragma once

#include "iclmine/backends.hpp"
#include "iclmine/bm25.hpp"
#include "iclmine/corpus.hpp"
#include "iclmine/prompts.hpp"
#include "iclmine/w2w.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iclmine::sentence_mining {

enum class Origin { mined, w2w_shot, gold };

std::string to_string(Origin origin);
Origin origin_from_string(std::string_view s);

struct SentencePair {
    std::string source_text;
    std::string target_text;
    std::optional<double> similarity;
    Origin origin = Origin::mined;

    bool operator==(const SentencePair&) const = default;
};

struct MinedPool {
    std::vector<SentencePair> pairs;
    int iteration = 1;

    bool operator==(const MinedPool&) const = default;
};

/// Wrap a gold parallel corpus as an unscored pool (comparison baselines).
MinedPool gold_pool(const corpus::ParallelCorpus& gold);

struct RandomPolicy {
    int k = 8;
};

struct TopKPolicy {
    int k = 8;
};

struct TopKBm25Policy {
    int k = 8;
    double tau = 0.90;
    int fallback_m = 20;
    bm25::Bm25Params bm25;
};

using SelectionPolicy = std::variant<RandomPolicy, TopKPolicy, TopKBm25Policy>;

void validate(const SelectionPolicy& policy);

/// Pool indices chosen for one query, best first. bm25_scores is parallel to
/// indices for BM25-based selections and empty otherwise.
struct Selection {
    std::vector<std::size_t> indices;
    std::vector<double> bm25_scores;
    /// True when the similarity threshold left fewer than k candidates.
    bool fallback = false;
    std::size_t candidate_count = 0;
};

std::vector<SentencePair> materialize(const MinedPool& pool, const Selection& selection);

enum class ShotStrategy { first, similarity };

/// k back-translation shots from the word-by-word corpus, oriented L_t -> L_s:
/// source_text is the word-by-word rendering, target_text the original
/// sentence. `similarity` ranks rows by sim(rendering, original); it needs sim.
std::vector<SentencePair> select_backtranslation_shots(const w2w::W2wCorpus& w2w,
                                                       int k,
                                                       ShotStrategy strategy = ShotStrategy::first,
                                                       const std::function<double(std::string_view, std::string_view)>& sim = {});

struct GenerationSettings {
    prompts::PromptTemplates templates;
    backends::DecodingMode mode = backends::Greedy{};
    int max_new_tokens = 256;
    int concurrency = 1;
};

using SimFn = std::function<double(std::string_view, std::string_view)>;

/// Translate every unlabeled L_t sentence into L_s with the shots in the
/// prompt, and score each (generated L_s, original L_t) pair with sim.
MinedPool back_translate(const corpus::MonolingualCorpus& unlabeled,
                         const std::vector<SentencePair>& shots,
                         const corpus::LanguageSpec& source,
                         const corpus::LanguageSpec& target,
                         const GenerationSettings& settings,
                         backends::LanguageModel& llm,
                         const SimFn& sim);

/// First k pairs in pool order.
Selection select_random(const MinedPool& pool, int k);
/// k highest-similarity pairs, descending; ties keep pool order.
Selection select_topk(const MinedPool& pool, int k);

/// Pool indices with similarity > tau, in pool order; when fewer than k
/// survive, the fallback_m most similar pairs instead.
Selection threshold_candidates(const MinedPool& pool, const TopKBm25Policy& policy);

/// Rank the given candidates by BM25(query, source_text) using an index built
/// over those candidates only. Ties: higher similarity, then lower pool index.
Selection rank_bm25(const MinedPool& pool, const std::vector<std::size_t>& candidates, std::string_view query, int k,
                    const bm25::Bm25Params& params);

/// Similarity threshold (with top-m fallback) followed by per-query BM25.
Selection select_topk_bm25(const MinedPool& pool, std::string_view query, const TopKBm25Policy& policy);

/// Dispatch on the policy variant. Random and TopK ignore the query.
Selection select(const MinedPool& pool, std::string_view query, const SelectionPolicy& policy);

/// Reorders a best-first selection into prompt order.
std::vector<SentencePair> prompt_order(std::vector<SentencePair> best_first, bool best_last);

struct MiningSettings {
    int k = 8;
    int iterations = 1;
    ShotStrategy shot_strategy = ShotStrategy::first;
    GenerationSettings generation;
};

/// Back-translate with w2w shots; each further iteration re-runs
/// back-translation using the previous pool's global top-k as shots.
MinedPool mine_examples(const corpus::MonolingualCorpus& unlabeled,
                        const w2w::W2wCorpus& w2w,
                        const corpus::LanguageSpec& source,
                        const corpus::LanguageSpec& target,
                        const MiningSettings& settings,
                        backends::LanguageModel& llm,
                        const SimFn& sim);

/// JSONL {source, target, sim, origin, iteration}.
std::string to_jsonl(const MinedPool& pool);
MinedPool pool_from_jsonl(std::string_view content);

}  // namespace iclmine::sentence_mining
