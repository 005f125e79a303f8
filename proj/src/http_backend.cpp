#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "iclmine/http_backend.hpp"

#include "iclmine/errors.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <thread>

namespace iclmine::backends {

std::string api_key_from_env()
{
    const char* key = std::getenv("ICL_MINER_API_KEY");
    return key == nullptr ? std::string() : std::string(key);
}

InFlightLimit::InFlightLimit(int limit) : slots_(std::max(1, std::min(limit, 1024))) {}

namespace {

class SlotGuard {
public:
    explicit SlotGuard(InFlightLimit& limit) : limit_(limit) { limit_.acquire(); }
    ~SlotGuard() { limit_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    InFlightLimit& limit_;
};

bool retryable_status(int status)
{
    return status == 429 || status >= 500;
}

}  // namespace

OpenAICompatibleClient::OpenAICompatibleClient(HttpSettings settings)
    : settings_(std::move(settings)), limit_(std::make_shared<InFlightLimit>(settings_.max_in_flight))
{
    const auto scheme_end = settings_.base_url.find("://");
    if (settings_.base_url.empty() || scheme_end == std::string::npos) {
        throw ConfigError("backend base_url must look like http(s)://host[:port][/prefix], got '" +
                          settings_.base_url + "'");
    }
    const auto path_start = settings_.base_url.find('/', scheme_end + 3);
    origin_ = settings_.base_url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? std::string() : settings_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
        path_prefix_.pop_back();
    }
    if (settings_.max_attempts < 1) {
        throw ConfigError("max_attempts must be at least 1");
    }
}

nlohmann::json OpenAICompatibleClient::post(const std::string& endpoint, const nlohmann::json& body)
{
    SlotGuard slot(*limit_);
    const auto path = path_prefix_ + endpoint;
    const auto payload = body.dump();
    std::string last_error;
    auto backoff = settings_.initial_backoff;
    for (int attempt = 1; attempt <= settings_.max_attempts; ++attempt) {
        httplib::Client client(origin_);
        client.set_connection_timeout(settings_.timeout);
        client.set_read_timeout(settings_.timeout);
        client.set_write_timeout(settings_.timeout);
        httplib::Headers headers;
        if (!settings_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + settings_.api_key);
        }
        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
        } else if (result->status >= 200 && result->status < 300) {
            try {
                return nlohmann::json::parse(result->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw BackendError("malformed JSON from " + origin_ + path + ": " + e.what());
            }
        } else if (retryable_status(result->status)) {
            last_error = "HTTP " + std::to_string(result->status);
        } else {
            throw BackendError("HTTP " + std::to_string(result->status) + " from " + origin_ + path + ": " +
                               result->body.substr(0, 300));
        }
        if (attempt < settings_.max_attempts) {
            spdlog::warn("{}{} attempt {}/{} failed ({}); retrying in {} ms", origin_, path, attempt,
                         settings_.max_attempts, last_error, backoff.count());
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw BackendError(origin_ + path + " failed after " + std::to_string(settings_.max_attempts) +
                       " attempts: " + last_error);
}

nlohmann::json HttpLanguageModel::request_body(const GenerationRequest& request) const
{
    nlohmann::json body = {
        {"model", client_.settings().model},
        {"prompt", request.prompt},
        {"n", request.num_samples},
        {"max_tokens", request.max_new_tokens},
        {"logprobs", 1},
    };
    // Servers match a " " stop string against the leading space of the first
    // token, so whitespace stops are enforced client-side only.
    std::vector<std::string> stop = request.stop.substrings;
    if (request.stop.at_whitespace) {
        stop.push_back("\n");
    }
    if (!stop.empty()) {
        body["stop"] = stop;
    }
    if (const auto* sampling = std::get_if<RandomSampling>(&request.mode)) {
        body["temperature"] = sampling->temperature;
        body["seed"] = sampling->seed;
    } else if (const auto* beam = std::get_if<Beam>(&request.mode)) {
        body["temperature"] = 0.0;
        body["use_beam_search"] = true;
        body["best_of"] = std::max(beam->width, request.num_samples);
    } else {
        body["temperature"] = 0.0;
    }
    return body;
}

std::vector<ScoredCompletion> HttpLanguageModel::parse_response(const nlohmann::json& response, const StopCondition& stop)
{
    if (!response.contains("choices") || !response["choices"].is_array()) {
        throw BackendError("completion response has no 'choices' array");
    }
    struct Choice {
        long index;
        ScoredCompletion completion;
        bool has_logprobs;
    };
    std::vector<Choice> choices;
    long position = 0;
    for (const auto& choice : response["choices"]) {
        if (!choice.contains("text") || !choice["text"].is_string()) {
            throw BackendError("completion choice has no text");
        }
        const auto raw = choice["text"].get<std::string>();
        const auto index = choice.value("index", position);
        ++position;

        const auto cut = apply_stop(raw, stop);
        double score = 0.0;
        bool has_logprobs = false;
        const auto& lp = choice.contains("logprobs") ? choice["logprobs"] : nlohmann::json();
        if (lp.is_object() && lp.contains("token_logprobs") && lp["token_logprobs"].is_array()) {
            has_logprobs = true;
            // Only tokens that start before the end of the kept text count.
            const auto found = cut.empty() ? std::string::npos : raw.find(cut);
            const std::size_t kept_end = found == std::string::npos ? raw.size() : found + cut.size();
            const auto& logprobs = lp["token_logprobs"];
            const auto tokens = lp.contains("tokens") && lp["tokens"].is_array() ? lp["tokens"] : nlohmann::json::array();
            const bool have_tokens = tokens.size() == logprobs.size();
            std::size_t offset = 0;
            for (std::size_t t = 0; t < logprobs.size(); ++t) {
                if (have_tokens && offset >= kept_end) {
                    break;
                }
                if (logprobs[t].is_number()) {
                    score += logprobs[t].get<double>();
                }
                if (have_tokens && tokens[t].is_string()) {
                    offset += tokens[t].get<std::string>().size();
                }
            }
        }
        choices.push_back({index, {raw, score}, has_logprobs});
    }
    std::stable_sort(choices.begin(), choices.end(), [](const Choice& a, const Choice& b) { return a.index < b.index; });
    const bool all_logprobs = !choices.empty() && std::all_of(choices.begin(), choices.end(), [](const Choice& c) {
        return c.has_logprobs;
    });
    std::vector<ScoredCompletion> out;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        auto completion = std::move(choices[i].completion);
        if (!all_logprobs) {
            completion.sequence_score = -static_cast<double>(i + 1);
        }
        out.push_back(std::move(completion));
    }
    return out;
}

std::vector<ScoredCompletion> HttpLanguageModel::generate(const GenerationRequest& request)
{
    validate(request);
    const auto response = client_.post("/completions", request_body(request));
    return finalize_completions(parse_response(response, request.stop), request);
}

EmbeddingVector HttpEmbeddingModel::embed(std::string_view text)
{
    if (text.empty()) {
        throw BackendError("cannot embed empty text");
    }
    const nlohmann::json body = {
        {"model", client_.settings().embedding_model},
        {"input", nlohmann::json::array({std::string(text)})},
    };
    const auto response = client_.post("/embeddings", body);
    try {
        return EmbeddingVector(response.at("data").at(0).at("embedding").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed embedding response: ") + e.what());
    }
}

}  // namespace iclmine::backends
