#include "iclmine/errors.hpp"
#include "iclmine/mock_backends.hpp"
#include "iclmine/sentence_mining.hpp"
#include "iclmine/similarity.hpp"

#include "support/oracles.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <algorithm>
#include <functional>
#include <mutex>
#include <random>

using namespace iclmine;
using namespace iclmine::sentence_mining;

namespace {

const corpus::LanguageSpec kSpa{"spa_Latn", "Spanish"};
const corpus::LanguageSpec kEng{"eng_Latn", "English"};

/// Answers a sentence prompt with f(query line) and records the prompts.
class FnModel : public backends::LanguageModel {
public:
    explicit FnModel(std::function<std::string(const std::string&)> f) : f_(std::move(f)) {}

    std::vector<backends::ScoredCompletion> generate(const backends::GenerationRequest& request) override
    {
        const auto& p = request.prompt;
        const auto end = p.rfind('\n');
        const auto begin = p.rfind('\n', end - 1) + 1;
        const auto line = p.substr(begin, end - begin);
        {
            std::lock_guard lock(mutex_);
            prompts_.push_back(p);
        }
        const auto out = f_(line.substr(line.find(": ") + 2));
        if (out == "!fail") {
            throw BackendError("scripted failure");
        }
        if (out.empty()) {
            return {};
        }
        return backends::finalize_completions({{" " + out + "\nEnglish: ", -1.0}}, request);
    }
    std::string id() const override { return "fn"; }

    std::vector<std::string> prompts() const
    {
        std::lock_guard lock(mutex_);
        return prompts_;
    }

private:
    std::function<std::string(const std::string&)> f_;
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

std::string upper(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

double length_sim(std::string_view a, std::string_view b)
{
    return 1.0 / (1.0 + std::abs(static_cast<double>(a.size()) - static_cast<double>(b.size())));
}

MinedPool pool_with_sims(const std::vector<double>& sims)
{
    MinedPool pool;
    for (std::size_t i = 0; i < sims.size(); ++i) {
        pool.pairs.push_back({fmt::format("src {}", i), fmt::format("tgt {}", i), sims[i], Origin::mined});
    }
    return pool;
}

w2w::W2wCorpus w2w_corpus(std::size_t n)
{
    w2w::W2wCorpus c;
    for (std::size_t i = 0; i < n; ++i) {
        c.pairs.emplace_back(fmt::format("original {}", i), fmt::format("rendering {}", std::string(i, 'x')));
        c.stats.push_back({});
    }
    return c;
}

struct RandomPool {
    MinedPool pool;
    std::vector<oracle::PoolRow> rows;
};

RandomPool random_pool(std::mt19937_64& rng, std::size_t n)
{
    RandomPool r;
    std::uniform_int_distribution<int> bucket(0, 20);
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = oracle::random_sentence(rng, 40, 12);
        const double sim = bucket(rng) / 20.0;
        r.pool.pairs.push_back({s, "t" + std::to_string(i), sim, Origin::mined});
        r.rows.push_back({s, sim});
    }
    return r;
}

}  // namespace

TEST_SUITE("sentence_mining")
{
    TEST_CASE("back-translation shots are the first k, reversed")
    {
        const auto w2w = w2w_corpus(997);
        const auto shots = select_backtranslation_shots(w2w, 8);
        REQUIRE(shots.size() == 8);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(shots[i].source_text == w2w.pairs[i].second);
            CHECK(shots[i].target_text == w2w.pairs[i].first);
            CHECK(shots[i].origin == Origin::w2w_shot);
        }
        CHECK(select_backtranslation_shots(w2w_corpus(2), 3).size() == 2);
    }

    TEST_CASE("back-translation shots by similarity")
    {
        const auto w2w = w2w_corpus(6);
        // length_sim favours renderings closest in length to "original N".
        const auto shots = select_backtranslation_shots(w2w, 2, ShotStrategy::similarity, length_sim);
        REQUIRE(shots.size() == 2);
        CHECK(shots[0].target_text == "original 0");
        CHECK(shots[1].target_text == "original 1");
        CHECK(*shots[0].similarity >= *shots[1].similarity);
    }

    TEST_CASE("back_translate scores (generated, original) pairs")
    {
        FnModel llm([](const std::string& q) { return upper(q); });
        const corpus::MonolingualCorpus unlabeled{kEng, {"the cat", "a dog barks"}};
        const std::vector<SentencePair> shots = {{"el perro", "the dog", 0.5, Origin::w2w_shot}};
        const auto pool = back_translate(unlabeled, shots, kSpa, kEng, {}, llm, length_sim);
        REQUIRE(pool.pairs.size() == 2);
        CHECK(pool.pairs[0] == SentencePair{"THE CAT", "the cat", 1.0, Origin::mined});
        CHECK(pool.pairs[1].source_text == "A DOG BARKS");
        for (const auto& p : llm.prompts()) {
            CHECK(p.rfind("Translate the following English sentence to Spanish:\nEnglish: el perro\nSpanish: the dog\n",
                          0) == 0);
        }
    }

    TEST_CASE("back_translate drops failures and aborts past half")
    {
        const corpus::MonolingualCorpus unlabeled{kEng, {"a", "b", "c", "d"}};
        FnModel some([](const std::string& q) { return q == "b" ? std::string("!fail") : q == "c" ? "" : "x" + q; });
        const auto pool = back_translate(unlabeled, {}, kSpa, kEng, {}, some, length_sim);
        CHECK(pool.pairs.size() == 2);
        CHECK(pool.pairs[1].target_text == "d");

        FnModel most([](const std::string& q) { return q == "a" ? "x" : "!fail"; });
        CHECK_THROWS_AS(back_translate(unlabeled, {}, kSpa, kEng, {}, most, length_sim), BackendError);
    }

    TEST_CASE("a copying generation still forms a pair")
    {
        FnModel echo([](const std::string& q) { return q; });
        backends::TrigramEmbeddingModel m;
        backends::SimilarityScorer scorer(m);
        const auto pool = back_translate({kEng, {"hello there"}}, {}, kSpa, kEng, {}, echo,
                                         [&](std::string_view a, std::string_view b) { return scorer.sim(a, b); });
        REQUIRE(pool.pairs.size() == 1);
        CHECK(*pool.pairs[0].similarity == doctest::Approx(1.0));
    }

    TEST_CASE("select_random takes the first k")
    {
        const auto pool = pool_with_sims({.1, .2, .3, .4, .5, .6, .7, .8, .9, 1.0});
        CHECK(select_random(pool, 3).indices == std::vector<std::size_t>{0, 1, 2});
        CHECK(select_random(pool, 20).indices.size() == 10);
        CHECK(select_random(pool, 3).indices == select_random(pool, 3).indices);
    }

    TEST_CASE("select_topk")
    {
        CHECK(select_topk(pool_with_sims({0.2, 0.95, 0.5}), 2).indices == std::vector<std::size_t>{1, 2});
        CHECK(select_topk(pool_with_sims({0.2, 0.95, 0.5}), 3).indices == std::vector<std::size_t>{1, 2, 0});
        CHECK(select_topk(pool_with_sims({0.5, 0.7, 0.5}), 3).indices == std::vector<std::size_t>{1, 0, 2});

        MinedPool unscored;
        unscored.pairs.push_back({"a", "b", std::nullopt, Origin::gold});
        CHECK_THROWS_AS(select_topk(unscored, 1), DataError);
    }

    TEST_CASE("select_topk equals sort-and-truncate")
    {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 20; ++trial) {
            auto r = random_pool(rng, 1 + rng() % 60);
            std::vector<std::size_t> expected(r.rows.size());
            for (std::size_t i = 0; i < expected.size(); ++i) {
                expected[i] = i;
            }
            std::stable_sort(expected.begin(), expected.end(),
                             [&](auto x, auto y) { return r.rows[x].sim > r.rows[y].sim; });
            expected.resize(std::min<std::size_t>(8, expected.size()));
            CHECK(select_topk(r.pool, 8).indices == expected);
        }
    }

    TEST_CASE("threshold path")
    {
        TopKBm25Policy policy{2, 0.6, 3, {}};
        const auto pool = pool_with_sims({0.7, 0.2, 0.9, 0.61, 0.6});
        const auto c = threshold_candidates(pool, policy);
        CHECK(c.indices == std::vector<std::size_t>{0, 2, 3});
        CHECK_FALSE(c.fallback);
        CHECK(c.candidate_count == 3);
    }

    TEST_CASE("fallback to the top-m most similar pairs")
    {
        std::vector<double> sims;
        for (int i = 0; i < 50; ++i) {
            sims.push_back(0.01 * i);  // all <= 0.9
        }
        const auto pool = pool_with_sims(sims);
        const TopKBm25Policy policy{8, 0.9, 20, {}};
        const auto c = threshold_candidates(pool, policy);
        CHECK(c.fallback);
        CHECK(c.candidate_count == 20);
        std::set<std::size_t> got(c.indices.begin(), c.indices.end());
        for (std::size_t i = 30; i < 50; ++i) {
            CHECK(got.count(i) == 1);
        }
        const auto s = select_topk_bm25(pool, "src 41", policy);
        CHECK(s.fallback);
        CHECK(s.indices.size() == 8);
        CHECK(s.indices.front() == 41);
    }

    TEST_CASE("tau 0 with k = |pool| is a pure BM25 ranking")
    {
        MinedPool pool;
        const std::vector<std::string> docs = {"red fox", "the quick fox jumps", "lazy dog", "quick quick dog",
                                               "a fox and a dog"};
        for (const auto& d : docs) {
            pool.pairs.push_back({d, "t", 0.5, Origin::mined});
        }
        const auto s = select_topk_bm25(pool, "quick fox", {5, 0.0, 20, {}});
        const auto expected = bm25::Bm25Index(docs).top_k("quick fox", 5);
        REQUIRE(s.indices.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(s.indices[i] == expected[i].first);
            CHECK(s.bm25_scores[i] == doctest::Approx(expected[i].second));
        }
    }

    TEST_CASE("select_topk_bm25 equals the brute-force oracle")
    {
        std::mt19937_64 rng(29);
        for (int trial = 0; trial < 30; ++trial) {
            auto r = random_pool(rng, 1 + rng() % 200);
            const auto query = oracle::random_sentence(rng, 40, 10);
            const TopKBm25Policy policy{8, 0.7, 20, {1.5, 0.75}};
            const auto got = select_topk_bm25(r.pool, query, policy);
            const auto want = oracle::topk_bm25(r.rows, query, 8, 0.7, 20, 1.5, 0.75);
            CHECK(got.indices == want.indices);
            CHECK(got.fallback == want.fallback);
            CHECK(got.candidate_count == want.candidates.size());
            for (std::size_t i = 0; i < got.indices.size() && i < want.indices.size(); ++i) {
                CHECK(got.bm25_scores[i] == doctest::Approx(want.scores[i]).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("selection invariants")
    {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            auto r = random_pool(rng, 30 + rng() % 100);
            const auto query = oracle::random_sentence(rng, 40, 8);
            std::size_t previous = r.pool.pairs.size() + 1;
            for (double tau : {0.0, 0.3, 0.5, 0.7, 0.9}) {
                const TopKBm25Policy policy{8, tau, 20, {}};
                const auto c = threshold_candidates(r.pool, policy);
                if (!c.fallback) {
                    CHECK(c.candidate_count <= previous);
                    previous = c.candidate_count;
                }
                const auto s = select_topk_bm25(r.pool, query, policy);
                CHECK(s.indices.size() <= 8);
                const std::set<std::size_t> cands(c.indices.begin(), c.indices.end());
                for (auto i : s.indices) {
                    CHECK(cands.count(i) == 1);
                    if (!s.fallback) {
                        CHECK(*r.pool.pairs[i].similarity > tau);
                    }
                }
                const auto again = select_topk_bm25(r.pool, query, policy);
                CHECK(again.indices == s.indices);
                CHECK(again.bm25_scores == s.bm25_scores);
            }
        }
    }

    TEST_CASE("a query equal to a candidate ranks it first")
    {
        MinedPool pool;
        for (const auto* s : {"alpha beta gamma", "delta epsilon zeta", "eta theta iota", "kappa lambda mu"}) {
            pool.pairs.push_back({s, "t", 0.95, Origin::mined});
        }
        for (std::size_t i = 0; i < pool.pairs.size(); ++i) {
            const auto s = select_topk_bm25(pool, pool.pairs[i].source_text, {2, 0.9, 20, {}});
            CHECK(s.indices.front() == i);
        }
    }

    TEST_CASE("bm25 ranking errors")
    {
        const auto pool = pool_with_sims({0.5});
        CHECK_THROWS_AS(rank_bm25(pool, {}, "src", 1, {}), DataError);
        CHECK_THROWS_AS(rank_bm25(pool, {0}, "  ", 1, {}), DataError);
        // Punctuation-only queries score zero everywhere and fall back to similarity order.
        CHECK(rank_bm25(pool, {0}, "...", 1, {}).bm25_scores == std::vector<double>{0.0});
        CHECK_THROWS_AS(select_topk_bm25(MinedPool{}, "q", {}), DataError);
    }

    TEST_CASE("policy validation and dispatch")
    {
        CHECK_THROWS_AS(validate(SelectionPolicy{RandomPolicy{0}}), ConfigError);
        CHECK_THROWS_AS(validate(SelectionPolicy{TopKBm25Policy{8, 1.5, 20, {}}}), ConfigError);
        CHECK_THROWS_AS(validate(SelectionPolicy{TopKBm25Policy{8, 0.9, 4, {}}}), ConfigError);
        const auto pool = pool_with_sims({0.2, 0.95, 0.5});
        CHECK(select(pool, "q", TopKPolicy{1}).indices == std::vector<std::size_t>{1});
        CHECK(select(pool, "q", RandomPolicy{1}).indices == std::vector<std::size_t>{0});
    }

    TEST_CASE("prompt order puts the best example last")
    {
        const std::vector<SentencePair> best_first = {{"a", "1", 0.9, Origin::mined}, {"b", "2", 0.5, Origin::mined}};
        CHECK(prompt_order(best_first, true).front().source_text == "b");
        CHECK(prompt_order(best_first, false).front().source_text == "a");
    }

    TEST_CASE("mine_examples")
    {
        FnModel llm([](const std::string& q) { return upper(q) + " ."; });
        const corpus::MonolingualCorpus unlabeled{kEng, {"one two", "three", "four five six"}};
        const auto w2w = w2w_corpus(4);
        MiningSettings settings;
        settings.k = 2;

        const auto once = mine_examples(unlabeled, w2w, kSpa, kEng, settings, llm, length_sim);
        const auto direct = back_translate(unlabeled, select_backtranslation_shots(w2w, 2), kSpa, kEng,
                                           settings.generation, llm, length_sim);
        CHECK(once == direct);
        CHECK(once.iteration == 1);

        settings.iterations = 2;
        const auto twice = mine_examples(unlabeled, w2w, kSpa, kEng, settings, llm, length_sim);
        CHECK(twice.iteration == 2);
        CHECK(twice == mine_examples(unlabeled, w2w, kSpa, kEng, settings, llm, length_sim));
        // The second round shows the first round's best pairs, L_t side first.
        const auto best = materialize(once, select_topk(once, 2));
        CHECK(llm.prompts().back().find("English: " + best[0].target_text + "\nSpanish: " + best[0].source_text) !=
              std::string::npos);
    }

    TEST_CASE("pool JSONL round trip")
    {
        MinedPool pool = pool_with_sims({0.25, 0.5});
        pool.pairs.push_back({"g", "h", std::nullopt, Origin::gold});
        pool.iteration = 2;
        const auto jsonl = to_jsonl(pool);
        CHECK(pool_from_jsonl(jsonl) == pool);
        CHECK_THROWS_AS(pool_from_jsonl(jsonl + R"({"source":"a","target":"b","sim":null,"origin":"gold","iteration":1})"
                                                "\n"),
                        DataError);
        CHECK(gold_pool({kSpa, kEng, {{"hola", "hello"}}}).pairs.front() ==
              SentencePair{"hola", "hello", std::nullopt, Origin::gold});
    }
}
