#pragma once

#include "iclmine/backends.hpp"

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

namespace iclmine::backends {

struct HttpSettings {
    /// e.g. "http://localhost:8000/v1"; endpoints are appended as /completions and /embeddings.
    std::string base_url;
    std::string model;
    std::string embedding_model;
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};
    int max_in_flight = 4;
};

/// Reads ICL_MINER_API_KEY; empty when unset.
std::string api_key_from_env();

/// Bounds the number of concurrent in-flight requests across threads.
class InFlightLimit {
public:
    explicit InFlightLimit(int limit);
    void acquire() { slots_.acquire(); }
    void release() { slots_.release(); }

private:
    std::counting_semaphore<1024> slots_;
};

/// Client for an OpenAI-compatible completions/embeddings server (vLLM,
/// llama.cpp server, ...). Transport errors, 429 and 5xx are retried with
/// exponential backoff; other HTTP errors fail immediately.
class OpenAICompatibleClient {
public:
    explicit OpenAICompatibleClient(HttpSettings settings);

    /// POST path (relative to base_url) with a JSON body; returns parsed JSON.
    nlohmann::json post(const std::string& endpoint, const nlohmann::json& body);

    const HttpSettings& settings() const noexcept { return settings_; }

private:
    HttpSettings settings_;
    std::string origin_;
    std::string path_prefix_;
    std::shared_ptr<InFlightLimit> limit_;
};

class HttpLanguageModel : public LanguageModel {
public:
    explicit HttpLanguageModel(HttpSettings settings) : client_(std::move(settings)) {}

    std::vector<ScoredCompletion> generate(const GenerationRequest& request) override;
    std::string id() const override { return "http:" + client_.settings().model; }

    /// Request body sent for a generation request.
    nlohmann::json request_body(const GenerationRequest& request) const;

    /// Scores from summed token log-probabilities when present, otherwise
    /// provider order mapped to -1, -2, ...
    static std::vector<ScoredCompletion> parse_response(const nlohmann::json& response, const StopCondition& stop);

private:
    OpenAICompatibleClient client_;
};

class HttpEmbeddingModel : public EmbeddingModel {
public:
    explicit HttpEmbeddingModel(HttpSettings settings) : client_(std::move(settings)) {}

    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return "http:" + client_.settings().embedding_model; }

private:
    OpenAICompatibleClient client_;
};

}  // namespace iclmine::backends
