#include "iclmine/cache.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/io.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

namespace iclmine::backends {

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root))
{
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) {
        throw ConfigError("cache directory " + root_.string() + " is not writable: " + ec.message());
    }
}

std::string ResponseCache::fingerprint(const nlohmann::json& key)
{
    return io::sha256_hex(key.dump());
}

std::filesystem::path ResponseCache::entry_path(const std::string& fp) const
{
    return root_ / fp.substr(0, 2) / (fp + ".json");
}

std::optional<nlohmann::json> ResponseCache::get(const nlohmann::json& key) const
{
    const auto fp = fingerprint(key);
    const auto path = entry_path(fp);
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    try {
        auto entry = nlohmann::json::parse(io::read_file(path));
        if (entry.at("key") != key) {
            spdlog::warn("cache entry {} does not match its key; ignoring", path.string());
            return std::nullopt;
        }
        return entry.at("payload");
    } catch (const std::exception& e) {
        spdlog::warn("corrupt cache entry {} ({}); treating as a miss", path.string(), e.what());
        return std::nullopt;
    }
}

void ResponseCache::put(const nlohmann::json& key, const nlohmann::json& payload) const
{
    const nlohmann::json entry = {{"key", key}, {"payload", payload}};
    io::write_file_atomic(entry_path(fingerprint(key)), entry.dump() + "\n");
}

nlohmann::json generation_cache_key(const std::string& backend_id, const GenerationRequest& request)
{
    return {{"backend", backend_id}, {"kind", "generate"}, {"request", to_json(request)}};
}

nlohmann::json embedding_cache_key(const std::string& backend_id, std::string_view text)
{
    return {{"backend", backend_id}, {"kind", "embed"}, {"text", std::string(text)}};
}

std::vector<ScoredCompletion> CachedLanguageModel::generate(const GenerationRequest& request)
{
    const auto key = generation_cache_key(inner_.id(), request);
    if (auto hit = cache_.get(key)) {
        try {
            std::vector<ScoredCompletion> out;
            for (const auto& c : *hit) {
                out.push_back({c.at("text").get<std::string>(), c.at("score").get<double>()});
            }
            return out;
        } catch (const nlohmann::json::exception& e) {
            spdlog::warn("unreadable cached completion list ({}); regenerating", e.what());
        }
    }
    auto result = inner_.generate(request);
    nlohmann::json payload = nlohmann::json::array();
    for (const auto& c : result) {
        payload.push_back({{"text", c.text}, {"score", c.sequence_score}});
    }
    cache_.put(key, payload);
    return result;
}

EmbeddingVector CachedEmbeddingModel::embed(std::string_view text)
{
    if (text.empty()) {
        throw BackendError("cannot embed empty text");
    }
    const auto key = embedding_cache_key(inner_.id(), text);
    if (auto hit = cache_.get(key)) {
        try {
            return EmbeddingVector(hit->get<std::vector<double>>());
        } catch (const std::exception& e) {
            spdlog::warn("unreadable cached embedding ({}); recomputing", e.what());
        }
    }
    auto vector = inner_.embed(text);
    cache_.put(key, vector.values());
    return vector;
}

}  // namespace iclmine::backends
