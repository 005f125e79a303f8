#include "iclmine/bm25.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iclmine::bm25 {

void validate(const Bm25Params& params)
{
    if (!(params.k1 >= 0.0)) {
        throw ConfigError("bm25 k1 must be non-negative");
    }
    if (!(params.b >= 0.0 && params.b <= 1.0)) {
        throw ConfigError("bm25 b must lie in [0, 1]");
    }
}

std::vector<std::string> tokenize(std::string_view text)
{
    // Folding the whole string once is much cheaper than folding every token.
    return text::word_tokens(text::normalize_word(text), false);
}

Bm25Index::Bm25Index(const std::vector<std::string>& docs, Bm25Params params) : params_(params)
{
    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(docs.size());
    for (const auto& d : docs) {
        tokenized.push_back(tokenize(d));
    }
    build(std::move(tokenized));
}

Bm25Index::Bm25Index(std::vector<std::vector<std::string>> tokenized_docs, Bm25Params params) : params_(params)
{
    build(std::move(tokenized_docs));
}

void Bm25Index::build(std::vector<std::vector<std::string>> docs)
{
    validate(params_);
    if (docs.empty()) {
        throw DataError("bm25: cannot index an empty document set");
    }
    term_freqs_.reserve(docs.size());
    lengths_.reserve(docs.size());
    for (auto& doc : docs) {
        std::unordered_map<std::string, std::size_t> tf;
        for (auto& term : doc) {
            ++tf[std::move(term)];
        }
        for (const auto& [term, count] : tf) {
            ++doc_freq_[term];
        }
        lengths_.push_back(doc.size());
        term_freqs_.push_back(std::move(tf));
    }
    const auto total = std::accumulate(lengths_.begin(), lengths_.end(), std::size_t{0});
    avg_len_ = static_cast<double>(total) / static_cast<double>(lengths_.size());
    if (avg_len_ == 0.0) {
        throw DataError("bm25: every document is empty (average length 0)");
    }
}

std::size_t Bm25Index::doc_freq(const std::string& term) const
{
    auto it = doc_freq_.find(term);
    return it == doc_freq_.end() ? 0 : it->second;
}

double Bm25Index::idf(const std::string& term) const
{
    const auto n = static_cast<double>(size());
    const auto df = static_cast<double>(doc_freq(term));
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::score_tokens(const std::vector<std::string>& query_tokens, std::size_t doc_id) const
{
    if (doc_id >= size()) {
        throw std::out_of_range("bm25: doc_id " + std::to_string(doc_id) + " out of range");
    }
    const auto& tf = term_freqs_[doc_id];
    const double norm = 1.0 - params_.b + params_.b * static_cast<double>(lengths_[doc_id]) / avg_len_;
    double total = 0.0;
    for (const auto& term : query_tokens) {
        auto it = tf.find(term);
        if (it == tf.end()) {
            continue;
        }
        const auto f = static_cast<double>(it->second);
        total += idf(term) * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
    }
    return total;
}

double Bm25Index::score(std::string_view query, std::size_t doc_id) const
{
    return score_tokens(tokenize(query), doc_id);
}

std::vector<double> Bm25Index::score_all(std::string_view query) const
{
    const auto tokens = tokenize(query);
    std::vector<double> scores(size());
    for (std::size_t d = 0; d < size(); ++d) {
        scores[d] = score_tokens(tokens, d);
    }
    return scores;
}

std::vector<std::pair<std::size_t, double>> Bm25Index::top_k(std::string_view query, std::size_t k) const
{
    const auto scores = score_all(query);
    std::vector<std::pair<std::size_t, double>> ranked;
    ranked.reserve(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d) {
        ranked.emplace_back(d, scores[d]);
    }
    const auto keep = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) {
                              return a.second > b.second;
                          }
                          return a.first < b.first;
                      });
    ranked.resize(keep);
    return ranked;
}

}  // namespace iclmine::bm25
