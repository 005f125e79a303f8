#pragma once

#include "iclmine/backends.hpp"
#include "iclmine/cache.hpp"
#include "iclmine/config.hpp"
#include "iclmine/corpus.hpp"
#include "iclmine/metrics.hpp"
#include "iclmine/similarity.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace iclmine::pipeline {

/// Counts requests that reach the wrapped model (i.e. cache misses when
/// placed under a cache).
class CountingLanguageModel : public backends::LanguageModel {
public:
    explicit CountingLanguageModel(backends::LanguageModel& inner) : inner_(inner) {}

    std::vector<backends::ScoredCompletion> generate(const backends::GenerationRequest& request) override;
    std::string id() const override { return inner_.id(); }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    backends::LanguageModel& inner_;
    std::atomic<std::size_t> calls_{0};
};

class CountingEmbeddingModel : public backends::EmbeddingModel {
public:
    explicit CountingEmbeddingModel(backends::EmbeddingModel& inner) : inner_(inner) {}

    backends::EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return inner_.id(); }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    backends::EmbeddingModel& inner_;
    std::atomic<std::size_t> calls_{0};
};

/// The configured models behind a shared response cache.
class BackendStack {
public:
    explicit BackendStack(const config::PipelineConfig& config);
    /// Uses the given models instead of the configured ones (tests, fixture recording).
    BackendStack(const config::PipelineConfig& config,
                 std::unique_ptr<backends::LanguageModel> llm,
                 std::unique_ptr<backends::EmbeddingModel> embedder,
                 nlohmann::json identity);

    backends::LanguageModel& llm() { return *cached_llm_; }
    backends::EmbeddingModel& embedder() { return *cached_embedder_; }
    backends::SimilarityScorer& scorer() { return *scorer_; }

    std::size_t llm_calls() const { return counting_llm_->calls(); }
    std::size_t embedding_calls() const { return counting_embedder_->calls(); }
    /// Identifies the models (and, for mocks, the fixture contents).
    nlohmann::json identity() const;

private:
    void wire(const config::PipelineConfig& config);

    std::unique_ptr<backends::LanguageModel> llm_;
    std::unique_ptr<backends::EmbeddingModel> embedder_;
    std::unique_ptr<CountingLanguageModel> counting_llm_;
    std::unique_ptr<CountingEmbeddingModel> counting_embedder_;
    std::unique_ptr<backends::ResponseCache> cache_;
    std::unique_ptr<backends::CachedLanguageModel> cached_llm_;
    std::unique_ptr<backends::CachedEmbeddingModel> cached_embedder_;
    std::unique_ptr<backends::SimilarityScorer> scorer_;
    nlohmann::json identity_;
};

/// Exclusive ownership of a run directory through a pid lock file. A lock
/// left by a process that no longer exists is taken over with a warning.
class RunLock {
public:
    explicit RunLock(std::filesystem::path path);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Output file names inside a run directory.
namespace files {
inline constexpr const char* lexicon = "lexicon.tsv";
inline constexpr const char* lexicon_zero_shot = "lexicon.zero_shot.tsv";
inline constexpr const char* w2w = "w2w.jsonl";
inline constexpr const char* pool = "pool.jsonl";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_txt = "report.txt";
std::string hypothesis(config::Policy policy);
std::string audit(config::Policy policy);
std::string report(config::Policy policy);
}  // namespace files

enum class StageStatus { ran, skipped };

/// One run of the pipeline over a validated config. Every stage writes its
/// outputs and then a manifest; a stage whose manifest is present and whose
/// outputs still hash to the recorded values is skipped.
class Runner {
public:
    explicit Runner(config::PipelineConfig config);
    Runner(config::PipelineConfig config, std::unique_ptr<BackendStack> backends);

    const std::filesystem::path& run_dir() const noexcept { return run_dir_; }
    const config::PipelineConfig& config() const noexcept { return config_; }
    BackendStack& backends() { return *backends_; }

    /// With auto_prerequisites false, a missing earlier stage is a DataError.
    StageStatus mine_words();
    StageStatus build_w2w(bool auto_prerequisites);
    StageStatus mine_sentences(bool auto_prerequisites);
    StageStatus translate(config::Policy policy, bool auto_prerequisites);
    StageStatus evaluate(config::Policy policy, bool auto_prerequisites);

    /// Every configured policy (or only `only` when given), then the combined report.
    void run_all(const std::optional<std::vector<config::Policy>>& only = std::nullopt);

    bool stage_complete(const std::string& stage) const;
    std::filesystem::path path(const std::string& name) const { return run_dir_ / name; }

private:
    nlohmann::json manifest_for(const std::string& stage, const std::vector<std::filesystem::path>& inputs) const;
    bool up_to_date(const std::string& stage, const nlohmann::json& expected) const;
    void write_manifest(const std::string& stage, nlohmann::json manifest, const std::vector<std::string>& outputs);
    void require_stage(const std::string& stage, const std::string& producer) const;

    config::PipelineConfig config_;
    corpus::LanguageSpec source_;
    corpus::LanguageSpec target_;
    std::filesystem::path run_dir_;
    std::unique_ptr<BackendStack> backends_;
    std::unique_ptr<RunLock> lock_;
};

/// Directory name "run-<12 hex>" derived from the constants, the input file
/// hashes and the backend identity.
std::string run_name(const config::PipelineConfig& config, const nlohmann::json& backend_identity);

}  // namespace iclmine::pipeline
