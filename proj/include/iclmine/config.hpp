#pragma once

#include "iclmine/backends.hpp"
#include "iclmine/metrics.hpp"
#include "iclmine/prompts.hpp"
#include "iclmine/sentence_mining.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iclmine::config {

enum class Policy { zero_shot, uw2w, random, topk, topk_bm25, gold_kshot, gold_bm25 };

std::string to_string(Policy policy);
Policy policy_from_string(std::string_view s);
const std::vector<Policy>& all_policies();

enum class BackendKind { mock, http };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

enum class SentenceDecoding { greedy, beam };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string base_url;
    std::string model;
    std::string embedding_model;
    int concurrency = 4;
    int max_attempts = 3;
    int timeout_seconds = 120;
    std::filesystem::path cache_dir;
    /// Mock backend: prompt -> completions fixture (JSONL).
    std::filesystem::path mock_fixture;
    /// Mock backend: text -> vector fixture; trigram-hash embeddings when empty.
    std::filesystem::path embedding_fixture;
    int embedding_dim = 256;
};

struct PipelineConfig {
    /// Directory relative paths were resolved against.
    std::filesystem::path base_dir;

    std::string source_lang;
    std::string target_lang;
    std::optional<std::string> source_name;
    std::optional<std::string> target_name;

    std::filesystem::path source_vocab;
    std::filesystem::path target_vocab;
    /// D_U: unlabeled target-language sentences.
    std::filesystem::path unlabeled;
    /// D_T: line-aligned test set.
    std::filesystem::path test_source;
    std::filesystem::path test_target;
    /// Optional gold parallel dev set for the gold_* baselines.
    std::filesystem::path gold_source;
    std::filesystem::path gold_target;
    /// Source-language sentences for the word-by-word corpus; test_source when empty.
    std::filesystem::path w2w_source;
    std::size_t vocab_size = 10000;

    BackendConfig backend;

    int n = 10;
    int k_wp = 10;
    int k = 8;
    double tau = 0.90;
    int fallback_m = 20;
    int iterations = 1;
    double temperature = 1.0;
    sentence_mining::ShotStrategy shot_selection = sentence_mining::ShotStrategy::first;
    bool best_example_last = true;
    bm25::Bm25Params bm25;

    SentenceDecoding sentence_decoding = SentenceDecoding::greedy;
    int beam_width = 4;
    int word_max_tokens = 8;
    int sentence_max_tokens = 256;

    prompts::PromptTemplates templates;
    metrics::MetricConfigs metrics;

    std::filesystem::path output_dir = "runs";
    std::int64_t seed = 0;
    std::vector<Policy> policies = {Policy::zero_shot, Policy::uw2w, Policy::random, Policy::topk, Policy::topk_bm25};
};

/// Parse INI text; relative paths resolve against base_dir. Unknown sections
/// or keys are ConfigErrors naming the offending entry.
PipelineConfig parse(std::string_view ini, const std::filesystem::path& base_dir);
PipelineConfig load(const std::filesystem::path& path);

/// Checks ranges and that every referenced input exists. Error messages name
/// the field as "section.key".
void validate(const PipelineConfig& config);

/// Mining constants, decoding, prompts, metrics and seed: everything besides
/// paths and backend plumbing that shapes the outputs.
nlohmann::json constants_json(const PipelineConfig& config);

backends::DecodingMode sentence_mode(const PipelineConfig& config);

/// Whether the policy's inputs are configured (gold baselines need a gold set).
bool policy_available(const PipelineConfig& config, Policy policy);

}  // namespace iclmine::config
