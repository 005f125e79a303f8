#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace iclmine::bm25 {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
};

void validate(const Bm25Params& params);

/// Unicode word tokens (letters, marks, digits), case-folded; punctuation dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Okapi BM25 over a small, fixed document set. Uses the non-negative idf
/// ln((N - df + 0.5) / (df + 0.5) + 1), so every score is >= 0.
class Bm25Index {
public:
    /// Throws when docs is empty or every document has zero tokens.
    Bm25Index(const std::vector<std::string>& docs, Bm25Params params = {});
    Bm25Index(std::vector<std::vector<std::string>> tokenized_docs, Bm25Params params = {});

    std::size_t size() const noexcept { return lengths_.size(); }
    double avg_len() const noexcept { return avg_len_; }
    const Bm25Params& params() const noexcept { return params_; }
    std::size_t doc_freq(const std::string& term) const;
    std::size_t doc_len(std::size_t doc_id) const { return lengths_.at(doc_id); }
    const std::unordered_map<std::string, std::size_t>& doc_freqs() const noexcept { return doc_freq_; }

    double idf(const std::string& term) const;

    /// Sum over query tokens (with multiplicity). Throws std::out_of_range on a bad doc_id.
    double score(std::string_view query, std::size_t doc_id) const;
    double score_tokens(const std::vector<std::string>& query_tokens, std::size_t doc_id) const;

    /// min(k, N) (doc_id, score) pairs, descending score, ties by ascending doc_id.
    std::vector<std::pair<std::size_t, double>> top_k(std::string_view query, std::size_t k) const;
    /// Scores for every document, indexed by doc_id.
    std::vector<double> score_all(std::string_view query) const;

private:
    void build(std::vector<std::vector<std::string>> docs);

    Bm25Params params_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
    std::vector<std::size_t> lengths_;
    std::unordered_map<std::string, std::size_t> doc_freq_;
    double avg_len_ = 0.0;
};

}  // namespace iclmine::bm25
