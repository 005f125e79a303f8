#pragma once

#include "iclmine/backends.hpp"

#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

namespace iclmine::backends {

/// sim(x, y) = cosine(embed(x), embed(y)), with embeddings memoized per text.
class SimilarityScorer {
public:
    explicit SimilarityScorer(EmbeddingModel& model) : model_(model) {}

    double sim(std::string_view x, std::string_view y);
    EmbeddingVector embedding(std::string_view text);

private:
    EmbeddingModel& model_;
    std::mutex mutex_;
    std::unordered_map<std::string, EmbeddingVector> memo_;
};

}  // namespace iclmine::backends
