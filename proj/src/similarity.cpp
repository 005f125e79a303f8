#include "iclmine/similarity.hpp"

#include "iclmine/errors.hpp"

namespace iclmine::backends {

EmbeddingVector SimilarityScorer::embedding(std::string_view text)
{
    if (text.empty()) {
        throw BackendError("sim: empty text");
    }
    const std::string key(text);
    {
        std::lock_guard lock(mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) {
            return it->second;
        }
    }
    auto vector = model_.embed(text);
    std::lock_guard lock(mutex_);
    return memo_.try_emplace(key, std::move(vector)).first->second;
}

double SimilarityScorer::sim(std::string_view x, std::string_view y)
{
    return cosine(embedding(x), embedding(y));
}

}  // namespace iclmine::backends
