#include "iclmine/backends.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/text.hpp"

#include <algorithm>
#include <cmath>

namespace iclmine::backends {

std::string mode_name(const DecodingMode& mode)
{
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, RandomSampling>) {
                return "random_sampling";
            } else if constexpr (std::is_same_v<T, Greedy>) {
                return "greedy";
            } else {
                return "beam";
            }
        },
        mode);
}

void validate(const GenerationRequest& request)
{
    if (request.prompt.empty()) {
        throw BackendError("generation request has an empty prompt");
    }
    if (request.num_samples < 1) {
        throw BackendError("num_samples must be positive");
    }
    if (request.max_new_tokens < 1) {
        throw BackendError("max_new_tokens must be positive");
    }
    if (const auto* sampling = std::get_if<RandomSampling>(&request.mode)) {
        if (!(sampling->temperature > 0.0)) {
            throw BackendError("random sampling needs a positive temperature");
        }
    } else if (std::holds_alternative<Greedy>(request.mode)) {
        if (request.num_samples != 1) {
            throw BackendError("greedy decoding yields exactly one sample");
        }
    } else if (std::get<Beam>(request.mode).width < 1) {
        throw BackendError("beam width must be at least 1");
    }
}

nlohmann::json to_json(const GenerationRequest& request)
{
    nlohmann::json mode = {{"kind", mode_name(request.mode)}};
    if (const auto* sampling = std::get_if<RandomSampling>(&request.mode)) {
        mode["temperature"] = sampling->temperature;
        mode["seed"] = sampling->seed;
    } else if (const auto* beam = std::get_if<Beam>(&request.mode)) {
        mode["width"] = beam->width;
    }
    return {
        {"prompt", request.prompt},
        {"num_samples", request.num_samples},
        {"mode", mode},
        {"stop", {{"substrings", request.stop.substrings}, {"at_whitespace", request.stop.at_whitespace}}},
        {"max_new_tokens", request.max_new_tokens},
    };
}

std::string apply_stop(std::string_view text, const StopCondition& stop)
{
    const auto cps = text::to_u32(text);
    std::size_t begin = 0;
    while (begin < cps.size() && text::is_space(cps[begin])) {
        ++begin;
    }
    std::size_t end = cps.size();
    if (stop.at_whitespace) {
        end = begin;
        while (end < cps.size() && !text::is_space(cps[end])) {
            ++end;
        }
    }
    auto result = text::to_utf8(std::u32string_view(cps).substr(begin, end - begin));
    for (const auto& s : stop.substrings) {
        if (s.empty()) {
            continue;
        }
        if (auto pos = result.find(s); pos != std::string::npos) {
            result.resize(pos);
        }
    }
    return text::trim(result);
}

std::vector<ScoredCompletion> finalize_completions(std::vector<ScoredCompletion> raw, const GenerationRequest& request)
{
    std::vector<ScoredCompletion> out;
    out.reserve(raw.size());
    for (auto& completion : raw) {
        auto cut = apply_stop(completion.text, request.stop);
        if (!cut.empty()) {
            out.push_back({std::move(cut), completion.sequence_score});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ScoredCompletion& a, const ScoredCompletion& b) {
        return a.sequence_score > b.sequence_score;
    });
    const auto limit = std::holds_alternative<Greedy>(request.mode) ? 1 : request.num_samples;
    if (out.size() > static_cast<std::size_t>(limit)) {
        out.resize(static_cast<std::size_t>(limit));
    }
    return out;
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values))
{
    if (values_.empty()) {
        throw BackendError("embedding has zero dimensions");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw BackendError("embedding has a non-finite component");
        }
    }
}

double EmbeddingVector::norm() const
{
    double sum = 0.0;
    for (double v : values_) {
        sum += v * v;
    }
    return std::sqrt(sum);
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v)
{
    if (u.dim() != v.dim()) {
        throw BackendError("cosine: dimension mismatch (" + std::to_string(u.dim()) + " vs " +
                           std::to_string(v.dim()) + ")");
    }
    double dot = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i) {
        const double a = u.values()[i];
        const double b = v.values()[i];
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if (uu == 0.0 || vv == 0.0) {
        throw BackendError("cosine: zero vector");
    }
    return std::clamp(dot / std::sqrt(uu * vv), -1.0, 1.0);
}

}  // namespace iclmine::backends
