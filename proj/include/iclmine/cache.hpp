#pragma once

#include "iclmine/backends.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace iclmine::backends {

/// Content-addressed response store: one canonical-JSON file per fingerprint
/// under root/<2 hex>/<fingerprint>.json. Writes are temp-then-rename, so
/// concurrent writers of the same key are harmless.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root);

    /// SHA-256 over the canonical serialization of the key.
    static std::string fingerprint(const nlohmann::json& key);

    /// A corrupt or mismatched entry is logged and reported as a miss.
    std::optional<nlohmann::json> get(const nlohmann::json& key) const;
    void put(const nlohmann::json& key, const nlohmann::json& payload) const;

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::filesystem::path entry_path(const std::string& fp) const;

    std::filesystem::path root_;
};

nlohmann::json generation_cache_key(const std::string& backend_id, const GenerationRequest& request);
nlohmann::json embedding_cache_key(const std::string& backend_id, std::string_view text);

class CachedLanguageModel : public LanguageModel {
public:
    CachedLanguageModel(LanguageModel& inner, const ResponseCache& cache) : inner_(inner), cache_(cache) {}

    std::vector<ScoredCompletion> generate(const GenerationRequest& request) override;
    std::string id() const override { return inner_.id(); }

private:
    LanguageModel& inner_;
    const ResponseCache& cache_;
};

class CachedEmbeddingModel : public EmbeddingModel {
public:
    CachedEmbeddingModel(EmbeddingModel& inner, const ResponseCache& cache) : inner_(inner), cache_(cache) {}

    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return inner_.id(); }

private:
    EmbeddingModel& inner_;
    const ResponseCache& cache_;
};

}  // namespace iclmine::backends
