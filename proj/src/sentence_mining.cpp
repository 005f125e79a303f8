#include "iclmine/sentence_mining.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/parallel.hpp"
#include "iclmine/text.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace iclmine::sentence_mining {

std::string to_string(Origin origin)
{
    switch (origin) {
    case Origin::mined:
        return "mined";
    case Origin::w2w_shot:
        return "w2w_shot";
    case Origin::gold:
        return "gold";
    }
    return "mined";
}

Origin origin_from_string(std::string_view s)
{
    if (s == "mined") {
        return Origin::mined;
    }
    if (s == "w2w_shot") {
        return Origin::w2w_shot;
    }
    if (s == "gold") {
        return Origin::gold;
    }
    throw DataError("unknown sentence-pair origin '" + std::string(s) + "'");
}

MinedPool gold_pool(const corpus::ParallelCorpus& gold)
{
    MinedPool pool;
    for (const auto& [source, target] : gold.pairs) {
        pool.pairs.push_back({source, target, std::nullopt, Origin::gold});
    }
    return pool;
}

void validate(const SelectionPolicy& policy)
{
    std::visit(
        [](const auto& p) {
            if (p.k < 1) {
                throw ConfigError("selection k must be at least 1");
            }
            if constexpr (std::is_same_v<std::decay_t<decltype(p)>, TopKBm25Policy>) {
                if (!(p.tau >= 0.0 && p.tau <= 1.0)) {
                    throw ConfigError("tau must lie in [0, 1]");
                }
                if (p.fallback_m < p.k) {
                    throw ConfigError("fallback_m must be at least k");
                }
                bm25::validate(p.bm25);
            }
        },
        policy);
}

std::vector<SentencePair> materialize(const MinedPool& pool, const Selection& selection)
{
    std::vector<SentencePair> out;
    out.reserve(selection.indices.size());
    for (auto i : selection.indices) {
        out.push_back(pool.pairs.at(i));
    }
    return out;
}

std::vector<SentencePair> select_backtranslation_shots(const w2w::W2wCorpus& w2w, int k, ShotStrategy strategy, const SimFn& sim)
{
    if (w2w.size() == 0) {
        throw DataError("no word-by-word sentences to draw back-translation shots from");
    }
    if (k < 1) {
        throw ConfigError("k must be at least 1");
    }
    std::vector<std::size_t> order(w2w.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::optional<double>> sims(w2w.size());
    if (strategy == ShotStrategy::similarity) {
        if (!sim) {
            throw ConfigError("similarity shot selection needs a similarity function");
        }
        for (std::size_t i = 0; i < w2w.size(); ++i) {
            sims[i] = sim(w2w.pairs[i].second, w2w.pairs[i].first);
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return *sims[a] > *sims[b]; });
    }
    const auto keep = std::min(order.size(), static_cast<std::size_t>(k));
    if (order.size() < static_cast<std::size_t>(k)) {
        spdlog::warn("only {} word-by-word sentences for {} back-translation shots", order.size(), k);
    }
    std::vector<SentencePair> shots;
    for (std::size_t j = 0; j < keep; ++j) {
        const auto i = order[j];
        shots.push_back({w2w.pairs[i].second, w2w.pairs[i].first, sims[i], Origin::w2w_shot});
    }
    return shots;
}

MinedPool back_translate(const corpus::MonolingualCorpus& unlabeled,
                         const std::vector<SentencePair>& shots,
                         const corpus::LanguageSpec& source,
                         const corpus::LanguageSpec& target,
                         const GenerationSettings& settings,
                         backends::LanguageModel& llm,
                         const SimFn& sim)
{
    std::vector<prompts::Example> examples;
    for (const auto& s : shots) {
        examples.emplace_back(s.source_text, s.target_text);
    }
    const auto& sentences = unlabeled.sentences;
    struct Outcome {
        std::optional<SentencePair> pair;
        bool failed = false;
    };
    std::vector<Outcome> outcomes(sentences.size());
    parallel_for(sentences.size(), settings.concurrency, [&](std::size_t i) {
        backends::GenerationRequest request;
        request.prompt = prompts::sentence_kshot(settings.templates, target, source, examples, sentences[i]);
        request.num_samples = 1;
        request.mode = settings.mode;
        request.stop = backends::StopCondition::newline();
        request.max_new_tokens = settings.max_new_tokens;
        try {
            const auto completions = llm.generate(request);
            if (completions.empty()) {
                spdlog::warn("back-translation of unlabeled sentence {} was empty; dropped", i + 1);
                return;
            }
            const auto& generated = completions.front().text;
            const double similarity = sim(generated, sentences[i]);
            if (generated == sentences[i]) {
                spdlog::warn("back-translation of unlabeled sentence {} copies its input (sim {:.3f})", i + 1, similarity);
            }
            outcomes[i].pair = SentencePair{generated, sentences[i], similarity, Origin::mined};
        } catch (const BackendError& e) {
            spdlog::warn("back-translation of unlabeled sentence {} failed: {}", i + 1, e.what());
            outcomes[i].failed = true;
        }
    });

    MinedPool pool;
    std::size_t failures = 0;
    for (auto& outcome : outcomes) {
        failures += outcome.failed ? 1 : 0;
        if (outcome.pair) {
            pool.pairs.push_back(std::move(*outcome.pair));
        }
    }
    if (!sentences.empty() && failures * 2 > sentences.size()) {
        throw BackendError(fmt::format("back-translation aborted: {} of {} sentences failed", failures, sentences.size()));
    }
    return pool;
}

namespace {

void require_nonempty(const MinedPool& pool)
{
    if (pool.pairs.empty()) {
        throw DataError("cannot select examples from an empty pool");
    }
}

double similarity_of(const SentencePair& p)
{
    return p.similarity.value_or(-std::numeric_limits<double>::infinity());
}

std::vector<std::size_t> sorted_by_similarity(const MinedPool& pool)
{
    std::vector<std::size_t> order(pool.pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return similarity_of(pool.pairs[a]) > similarity_of(pool.pairs[b]);
    });
    return order;
}

void require_scored(const MinedPool& pool)
{
    for (const auto& p : pool.pairs) {
        if (!p.similarity) {
            throw DataError("similarity-based selection needs a scored pool");
        }
    }
}

}  // namespace

Selection select_random(const MinedPool& pool, int k)
{
    require_nonempty(pool);
    Selection selection;
    const auto keep = std::min(pool.pairs.size(), static_cast<std::size_t>(std::max(k, 0)));
    for (std::size_t i = 0; i < keep; ++i) {
        selection.indices.push_back(i);
    }
    selection.candidate_count = pool.pairs.size();
    return selection;
}

Selection select_topk(const MinedPool& pool, int k)
{
    require_nonempty(pool);
    require_scored(pool);
    auto order = sorted_by_similarity(pool);
    order.resize(std::min(order.size(), static_cast<std::size_t>(std::max(k, 0))));
    Selection selection;
    selection.indices = std::move(order);
    selection.candidate_count = pool.pairs.size();
    return selection;
}

Selection threshold_candidates(const MinedPool& pool, const TopKBm25Policy& policy)
{
    require_nonempty(pool);
    require_scored(pool);
    Selection selection;
    for (std::size_t i = 0; i < pool.pairs.size(); ++i) {
        if (*pool.pairs[i].similarity > policy.tau) {
            selection.indices.push_back(i);
        }
    }
    if (selection.indices.size() < static_cast<std::size_t>(policy.k)) {
        selection.fallback = true;
        auto order = sorted_by_similarity(pool);
        order.resize(std::min(order.size(), static_cast<std::size_t>(policy.fallback_m)));
        selection.indices = std::move(order);
    }
    selection.candidate_count = selection.indices.size();
    return selection;
}

Selection rank_bm25(const MinedPool& pool, const std::vector<std::size_t>& candidates, std::string_view query, int k,
                    const bm25::Bm25Params& params)
{
    if (candidates.empty()) {
        throw DataError("BM25 selection has no candidates");
    }
    if (text::trim(query).empty()) {
        throw DataError("BM25 selection needs a non-empty query");
    }
    std::vector<std::vector<std::string>> docs;
    docs.reserve(candidates.size());
    for (auto i : candidates) {
        docs.push_back(bm25::tokenize(pool.pairs.at(i).source_text));
    }
    const bm25::Bm25Index index(std::move(docs), params);
    const auto scores = index.score_all(query);

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        const double sa = similarity_of(pool.pairs[candidates[a]]);
        const double sb = similarity_of(pool.pairs[candidates[b]]);
        if (sa != sb) {
            return sa > sb;
        }
        return candidates[a] < candidates[b];
    });
    order.resize(std::min(order.size(), static_cast<std::size_t>(std::max(k, 0))));

    Selection selection;
    selection.candidate_count = candidates.size();
    for (auto d : order) {
        selection.indices.push_back(candidates[d]);
        selection.bm25_scores.push_back(scores[d]);
    }
    return selection;
}

Selection select_topk_bm25(const MinedPool& pool, std::string_view query, const TopKBm25Policy& policy)
{
    const auto candidates = threshold_candidates(pool, policy);
    auto selection = rank_bm25(pool, candidates.indices, query, policy.k, policy.bm25);
    selection.fallback = candidates.fallback;
    return selection;
}

Selection select(const MinedPool& pool, std::string_view query, const SelectionPolicy& policy)
{
    validate(policy);
    return std::visit(
        [&](const auto& p) -> Selection {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RandomPolicy>) {
                return select_random(pool, p.k);
            } else if constexpr (std::is_same_v<T, TopKPolicy>) {
                return select_topk(pool, p.k);
            } else {
                return select_topk_bm25(pool, query, p);
            }
        },
        policy);
}

std::vector<SentencePair> prompt_order(std::vector<SentencePair> best_first, bool best_last)
{
    if (best_last) {
        std::reverse(best_first.begin(), best_first.end());
    }
    return best_first;
}

MinedPool mine_examples(const corpus::MonolingualCorpus& unlabeled,
                        const w2w::W2wCorpus& w2w,
                        const corpus::LanguageSpec& source,
                        const corpus::LanguageSpec& target,
                        const MiningSettings& settings,
                        backends::LanguageModel& llm,
                        const SimFn& sim)
{
    if (settings.iterations < 1) {
        throw ConfigError("iterations must be at least 1");
    }
    auto shots = select_backtranslation_shots(w2w, settings.k, settings.shot_strategy, sim);
    auto pool = back_translate(unlabeled, shots, source, target, settings.generation, llm, sim);
    pool.iteration = 1;
    spdlog::info("iteration 1: mined {} of {} unlabeled sentences", pool.pairs.size(), unlabeled.sentences.size());
    for (int iteration = 2; iteration <= settings.iterations; ++iteration) {
        if (pool.pairs.empty()) {
            throw DataError("iteration " + std::to_string(iteration - 1) + " produced an empty pool");
        }
        // Previous best pairs, re-oriented for L_t -> L_s.
        shots.clear();
        for (const auto& p : materialize(pool, select_topk(pool, settings.k))) {
            shots.push_back({p.target_text, p.source_text, p.similarity, Origin::mined});
        }
        pool = back_translate(unlabeled, shots, source, target, settings.generation, llm, sim);
        pool.iteration = iteration;
        spdlog::info("iteration {}: mined {} of {} unlabeled sentences", iteration, pool.pairs.size(),
                     unlabeled.sentences.size());
    }
    return pool;
}

std::string to_jsonl(const MinedPool& pool)
{
    std::string out;
    for (const auto& p : pool.pairs) {
        nlohmann::json record = {
            {"source", p.source_text},
            {"target", p.target_text},
            {"sim", p.similarity ? nlohmann::json(*p.similarity) : nlohmann::json(nullptr)},
            {"origin", to_string(p.origin)},
            {"iteration", pool.iteration},
        };
        out += record.dump();
        out += '\n';
    }
    return out;
}

MinedPool pool_from_jsonl(std::string_view content)
{
    MinedPool pool;
    const auto lines = text::split_lines(content);
    bool first = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        try {
            const auto record = nlohmann::json::parse(lines[i]);
            SentencePair p{record.at("source").get<std::string>(), record.at("target").get<std::string>(), std::nullopt,
                           origin_from_string(record.at("origin").get<std::string>())};
            if (!record.at("sim").is_null()) {
                p.similarity = record.at("sim").get<double>();
            }
            const int iteration = record.at("iteration").get<int>();
            if (first) {
                pool.iteration = iteration;
                first = false;
            } else if (iteration != pool.iteration) {
                throw DataError("pool record " + std::to_string(i + 1) + " has a different iteration");
            }
            pool.pairs.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("pool record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return pool;
}

}  // namespace iclmine::sentence_mining
