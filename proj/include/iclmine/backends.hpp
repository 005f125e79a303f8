#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iclmine::backends {

struct RandomSampling {
    double temperature = 1.0;
    std::int64_t seed = 0;
    bool operator==(const RandomSampling&) const = default;
};

struct Greedy {
    bool operator==(const Greedy&) const = default;
};

struct Beam {
    int width = 4;
    bool operator==(const Beam&) const = default;
};

/// Decoding strategy for one request. Validated by validate(const GenerationRequest&).
using DecodingMode = std::variant<RandomSampling, Greedy, Beam>;

std::string mode_name(const DecodingMode& mode);

/// Where a completion is cut. Stop text is never part of the result.
struct StopCondition {
    std::vector<std::string> substrings;
    /// Cut at the first whitespace after any leading whitespace.
    bool at_whitespace = false;

    static StopCondition none() { return {}; }
    static StopCondition whitespace() { return {{}, true}; }
    static StopCondition newline() { return {{"\n"}, false}; }

    bool operator==(const StopCondition&) const = default;
};

struct GenerationRequest {
    std::string prompt;
    int num_samples = 1;
    DecodingMode mode = Greedy{};
    StopCondition stop;
    int max_new_tokens = 16;
};

/// Throws BackendError when the request violates its invariants
/// (empty prompt, non-positive sample count, greedy with n > 1, ...).
void validate(const GenerationRequest& request);

/// Canonical JSON of every request field; the basis of cache fingerprints.
nlohmann::json to_json(const GenerationRequest& request);

struct ScoredCompletion {
    std::string text;
    /// Higher is better. Sum of token log-probabilities, or -(rank+1) when
    /// the provider returns none.
    double sequence_score = 0.0;

    bool operator==(const ScoredCompletion&) const = default;
};

/// Apply the stop condition to raw completions, drop empties, stable-sort by
/// descending score and keep at most num_samples (exactly one for greedy).
std::vector<ScoredCompletion> finalize_completions(std::vector<ScoredCompletion> raw, const GenerationRequest& request);

std::string apply_stop(std::string_view text, const StopCondition& stop);

class EmbeddingVector {
public:
    /// Throws BackendError on empty or non-finite input.
    explicit EmbeddingVector(std::vector<double> values);

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return values_.size(); }
    double norm() const;

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

/// dot(u,v)/(|u||v|) clamped to [-1, 1]. Throws on dimension mismatch or a zero vector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Multilingual LLM text completion.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;
    virtual std::vector<ScoredCompletion> generate(const GenerationRequest& request) = 0;
    /// Identifies backend kind and model; part of cache fingerprints.
    virtual std::string id() const = 0;
};

/// Sentence embedding model behind sim(x, y).
class EmbeddingModel {
public:
    virtual ~EmbeddingModel() = default;
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual std::string id() const = 0;
};

}  // namespace iclmine::backends
