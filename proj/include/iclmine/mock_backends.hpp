#pragma once

#include "iclmine/backends.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace iclmine::backends {

/// Prompt -> completions and text -> vector tables read from JSONL. Each line
/// is either {"prompt": ..., "completions": [{"text": ..., "score": ...}]}
/// or {"text": ..., "vector": [...]}.
struct Fixtures {
    std::unordered_map<std::string, std::vector<ScoredCompletion>> completions;
    std::unordered_map<std::string, std::vector<double>> vectors;
};

Fixtures load_fixtures(const std::filesystem::path& path);

/// Replays fixture completions. A prompt without a fixture is an error, never
/// a silent fallback.
class FixtureLanguageModel : public LanguageModel {
public:
    explicit FixtureLanguageModel(std::unordered_map<std::string, std::vector<ScoredCompletion>> table,
                                  std::string name = "fixture");

    std::vector<ScoredCompletion> generate(const GenerationRequest& request) override;
    std::string id() const override { return "mock:" + name_; }

    std::size_t calls() const noexcept { return calls_.load(); }
    void reset_calls() noexcept { calls_ = 0; }

private:
    std::unordered_map<std::string, std::vector<ScoredCompletion>> table_;
    std::string name_;
    std::atomic<std::size_t> calls_{0};
};

class FixtureEmbeddingModel : public EmbeddingModel {
public:
    explicit FixtureEmbeddingModel(std::unordered_map<std::string, std::vector<double>> table,
                                   std::string name = "fixture");

    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return "mock:" + name_; }

    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::unordered_map<std::string, std::vector<double>> table_;
    std::string name_;
    std::atomic<std::size_t> calls_{0};
};

/// Deterministic fixture-free embedding. The text is whitespace-normalized,
/// case-folded and padded with one space on each side; every code-point
/// trigram is hashed with 64-bit FNV-1a over its UTF-8 bytes, bucket
/// hash % dim is incremented by one, and the count vector is L2-normalized.
class TrigramEmbeddingModel : public EmbeddingModel {
public:
    explicit TrigramEmbeddingModel(std::size_t dim = 256);

    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return "mock:trigram-" + std::to_string(dim_); }

    std::size_t calls() const noexcept { return calls_.load(); }
    void reset_calls() noexcept { calls_ = 0; }

private:
    std::size_t dim_;
    std::atomic<std::size_t> calls_{0};
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Forwards to another model and records every successful exchange so it can
/// be written out as a fixture file.
class RecordingLanguageModel : public LanguageModel {
public:
    explicit RecordingLanguageModel(LanguageModel& inner) : inner_(inner) {}

    std::vector<ScoredCompletion> generate(const GenerationRequest& request) override;
    std::string id() const override { return inner_.id(); }

    /// One JSONL record per distinct prompt, sorted by prompt.
    std::string to_jsonl() const;

private:
    LanguageModel& inner_;
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<ScoredCompletion>> recorded_;
};

}  // namespace iclmine::backends
