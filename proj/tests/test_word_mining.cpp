#include "iclmine/errors.hpp"
#include "iclmine/mock_backends.hpp"
#include "iclmine/prompts.hpp"
#include "iclmine/word_mining.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <mutex>
#include <random>

using namespace iclmine;
using namespace iclmine::word_mining;
using backends::ScoredCompletion;

namespace {

const corpus::LanguageSpec kSpa{"spa_Latn", "Spanish"};
const corpus::LanguageSpec kEng{"eng_Latn", "English"};

corpus::Vocabulary vocab(const corpus::LanguageSpec& lang, std::vector<std::string> words)
{
    return corpus::Vocabulary(lang, std::move(words));
}

std::string fwd_prompt(const std::string& word)
{
    return prompts::word_zero_shot({}, kSpa, kEng, word);
}

std::string bwd_prompt(const std::string& word)
{
    return prompts::word_zero_shot({}, kEng, kSpa, word);
}

std::vector<ScoredCompletion> ranked(const std::vector<std::string>& texts)
{
    std::vector<ScoredCompletion> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        out.push_back({texts[i], -1.0 - static_cast<double>(i)});
    }
    return out;
}

/// Answers from a bilingual dictionary whatever the prompt layout, and keeps
/// every prompt it sees.
class DictionaryModel : public backends::LanguageModel {
public:
    explicit DictionaryModel(std::map<std::string, std::vector<std::string>> dict) : dict_(std::move(dict)) {}

    std::vector<ScoredCompletion> generate(const backends::GenerationRequest& request) override
    {
        {
            std::lock_guard lock(mutex_);
            prompts_.push_back(request.prompt);
        }
        std::string word;
        if (request.prompt.back() == ':' && request.prompt.find('\n') != std::string::npos) {
            const auto end = request.prompt.rfind('\n');
            const auto begin = request.prompt.rfind('\n', end - 1) + 1;
            const auto line = request.prompt.substr(begin, end - begin);
            word = line.substr(line.find(": ") + 2);
        } else {
            const auto open = request.prompt.find('"');
            word = request.prompt.substr(open + 1, request.prompt.find('"', open + 1) - open - 1);
        }
        auto it = dict_.find(word);
        if (it == dict_.end()) {
            return {};
        }
        return backends::finalize_completions(ranked(it->second), request);
    }
    std::string id() const override { return "dict"; }

    std::vector<std::string> prompts() const
    {
        std::lock_guard lock(mutex_);
        return prompts_;
    }

private:
    std::map<std::string, std::vector<std::string>> dict_;
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

double length_sim(std::string_view a, std::string_view b)
{
    return 1.0 / (1.0 + std::abs(static_cast<double>(a.size()) - static_cast<double>(b.size())));
}

MiningConfig small_config()
{
    MiningConfig c;
    c.n = 3;
    c.k_wp = 10;
    return c;
}

}  // namespace

TEST_SUITE("word_mining")
{
    TEST_CASE("forward mining filters by the target vocabulary")
    {
        backends::FixtureLanguageModel llm({{fwd_prompt("gato"), ranked({"cat", "car", "gato"})}});
        const auto pool =
            mine_forward(vocab(kSpa, {"gato"}), vocab(kEng, {"cat", "car", "dog"}), small_config(), llm);
        REQUIRE(pool.entries().size() == 1);
        CHECK(pool.entries()[0].word == "gato");
        CHECK(pool.entries()[0].candidates == std::vector<Candidate>{{"cat", -1.0}, {"car", -2.0}});
    }

    TEST_CASE("forward candidates are cut at whitespace, normalized and deduplicated")
    {
        backends::FixtureLanguageModel llm({{fwd_prompt("gato"), ranked({" Cat\nSpanish:", "\"cat\",", "car park"})}});
        const auto pool = mine_forward(vocab(kSpa, {"gato"}), vocab(kEng, {"cat", "car"}), small_config(), llm);
        CHECK(*pool.find("gato") == std::vector<Candidate>{{"cat", -1.0}, {"car", -3.0}});
    }

    TEST_CASE("a word with empty completions is absent from the pool")
    {
        backends::FixtureLanguageModel llm(
            {{fwd_prompt("gato"), ranked({"cat"})}, {fwd_prompt("perro"), {{"   ", -1.0}}}});
        const auto pool = mine_forward(vocab(kSpa, {"gato", "perro"}), vocab(kEng, {"cat"}), small_config(), llm);
        CHECK(pool.find("perro") == nullptr);
        CHECK(pool.pair_count() == 1);
    }

    TEST_CASE("more than half of the words failing aborts")
    {
        backends::FixtureLanguageModel llm({{fwd_prompt("gato"), ranked({"cat"})}});
        CHECK_THROWS_AS(mine_forward(vocab(kSpa, {"gato", "perro", "casa"}), vocab(kEng, {"cat"}), small_config(), llm),
                        BackendError);
        backends::FixtureLanguageModel half({{fwd_prompt("gato"), ranked({"cat"})}});
        CHECK(mine_forward(vocab(kSpa, {"gato", "perro"}), vocab(kEng, {"cat"}), small_config(), half).pair_count() ==
              1);
    }

    TEST_CASE("backward mining")
    {
        CandidatePool forward(Direction::source_to_target);
        forward.set("gato", {{"cat", -1.0}, {"car", -2.0}});
        forward.set("coche", {{"car", -1.0}});
        backends::FixtureLanguageModel llm({{bwd_prompt("cat"), ranked({"gato"})},
                                            {bwd_prompt("car"), ranked({"coche"})}});
        const auto backward = mine_backward(forward, vocab(kSpa, {"gato", "coche"}), vocab(kEng, {"cat", "car"}),
                                            small_config(), llm);
        CHECK(*backward.find("cat") == std::vector<Candidate>{{"gato", -1.0}});
        CHECK(*backward.find("car") == std::vector<Candidate>{{"coche", -1.0}});
        // "car" appears under two source words but is translated once.
        CHECK(llm.calls() == 2);
    }

    TEST_CASE("back-translations outside the source vocabulary are dropped")
    {
        CandidatePool forward(Direction::source_to_target);
        forward.set("gato", {{"cat", -1.0}});
        backends::FixtureLanguageModel llm({{bwd_prompt("cat"), ranked({"kitty"})}});
        const auto backward =
            mine_backward(forward, vocab(kSpa, {"gato"}), vocab(kEng, {"cat"}), small_config(), llm);
        CHECK(backward.find("cat") == nullptr);
    }

    TEST_CASE("consistency filter")
    {
        CandidatePool forward(Direction::source_to_target);
        forward.set("gato", {{"cat", -1.0}, {"car", -2.0}});
        CandidatePool backward(Direction::target_to_source);
        backward.set("cat", {{"gato", -1.0}});
        backward.set("car", {{"coche", -1.0}});
        const auto pairs = consistency_filter(forward, backward);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].source_word == "gato");
        CHECK(pairs[0].target_word == "cat");
        CHECK(consistency_filter(forward, CandidatePool(Direction::target_to_source)).empty());
    }

    TEST_CASE("consistency filter matches the cross-product oracle")
    {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 30; ++trial) {
            std::uniform_int_distribution<int> words(1, 50);
            std::uniform_int_distribution<int> pick(0, 14);
            std::uniform_int_distribution<int> count(0, 4);
            std::map<std::string, std::vector<std::string>> f;
            std::map<std::string, std::vector<std::string>> b;
            CandidatePool fp(Direction::source_to_target);
            CandidatePool bp(Direction::target_to_source);
            for (int i = 0, n = words(rng); i < n; ++i) {
                const auto s = "s" + std::to_string(pick(rng));
                std::vector<Candidate> cands;
                for (int j = count(rng); j > 0; --j) {
                    const auto t = "t" + std::to_string(pick(rng));
                    if (std::find(f[s].begin(), f[s].end(), t) == f[s].end()) {
                        f[s].push_back(t);
                        cands.push_back({t, -1.0});
                    }
                }
                fp.set(s, cands);
                if (cands.empty()) {
                    f.erase(s);
                }
            }
            for (int t = 0; t < 15; ++t) {
                std::vector<Candidate> cands;
                const auto tw = "t" + std::to_string(t);
                for (int j = count(rng); j > 0; --j) {
                    const auto s = "s" + std::to_string(pick(rng));
                    b[tw].push_back(s);
                    cands.push_back({s, -1.0});
                }
                bp.set(tw, cands);
            }
            // set() replaces earlier entries, so rebuild the oracle view from the pool.
            f.clear();
            for (const auto& e : fp.entries()) {
                for (const auto& c : e.candidates) {
                    f[e.word].push_back(c.word);
                }
            }
            std::set<std::pair<std::string, std::string>> got;
            for (const auto& p : consistency_filter(fp, bp)) {
                got.emplace(p.source_word, p.target_word);
            }
            CHECK(got == oracle::consistency(f, b));
        }
    }

    TEST_CASE("rank_and_select")
    {
        const auto src = vocab(kSpa, {"a", "b", "c"});
        const std::map<std::string, double> sims = {{"a", 0.9}, {"b", 0.5}, {"c", 0.7}};
        auto sim = [&](std::string_view s, std::string_view) { return sims.at(std::string(s)); };
        const std::vector<WordPair> pairs = {{"a", "x", {}, {}}, {"b", "y", {}, {}}, {"c", "z", {}, {}}};
        const auto top = rank_and_select(pairs, sim, 2, src);
        REQUIRE(top.size() == 2);
        CHECK(top[0].source_word == "a");
        CHECK(top[0].similarity == 0.9);
        CHECK(top[1].source_word == "c");
        CHECK(rank_and_select(pairs, sim, 10, src).size() == 3);
        CHECK_THROWS_AS(rank_and_select({}, sim, 2, src), DataError);
    }

    TEST_CASE("rank_and_select equals a full sort truncated")
    {
        std::mt19937_64 rng(5);
        std::vector<std::string> words;
        for (int i = 0; i < 40; ++i) {
            words.push_back("w" + std::to_string(i));
        }
        const auto src = vocab(kSpa, words);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<WordPair> pairs;
            std::map<std::string, double> sims;
            std::uniform_int_distribution<int> sim_bucket(0, 5);
            for (const auto& w : words) {
                if (rng() % 2 == 0) {
                    pairs.push_back({w, w + "_t", {}, {}});
                    sims[w] = sim_bucket(rng) / 5.0;
                }
            }
            if (pairs.empty()) {
                continue;
            }
            auto expected = pairs;
            for (auto& p : expected) {
                p.similarity = sims[p.source_word];
            }
            std::stable_sort(expected.begin(), expected.end(), [&](const WordPair& x, const WordPair& y) {
                if (*x.similarity != *y.similarity) {
                    return *x.similarity > *y.similarity;
                }
                return *src.rank(x.source_word) < *src.rank(y.source_word);
            });
            expected.resize(std::min<std::size_t>(expected.size(), 10));
            const auto got = rank_and_select(pairs, [&](std::string_view s, std::string_view) {
                return sims.at(std::string(s));
            }, 10, src);
            CHECK(got == expected);
        }
    }

    TEST_CASE("k-shot refinement")
    {
        DictionaryModel llm({{"gato", {"cat"}}, {"perro", {"dog"}}, {"casa", {"house"}},
                             {"cat", {"gato"}}, {"dog", {"perro"}}, {"house", {"casa"}}});
        const auto src = vocab(kSpa, {"gato", "perro", "casa"});
        const auto tgt = vocab(kEng, {"cat", "dog", "house"});
        auto config = small_config();
        config.k_wp = 2;
        const auto result = mine_words(src, tgt, config, llm, length_sim);
        REQUIRE(result.zero_shot.size() == 2);
        REQUIRE(result.refined.size() == 2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(result.refined[i].source_word == result.zero_shot[i].source_word);
            CHECK(result.refined[i].target_word == result.zero_shot[i].target_word);
            CHECK(result.refined[i].similarity == result.zero_shot[i].similarity);
            CHECK(result.zero_shot[i].provenance == Provenance::zero_shot);
            CHECK(result.refined[i].provenance == Provenance::k_shot);
        }

        std::size_t kshot_prompts = 0;
        for (const auto& p : llm.prompts()) {
            if (p.rfind("Translate the following", 0) != 0) {
                continue;
            }
            ++kshot_prompts;
            const bool forward = p.find("Spanish word to English") != std::string::npos;
            for (const auto& seed : result.zero_shot) {
                const auto shot = forward ? "Spanish: " + seed.source_word + "\nEnglish: " + seed.target_word
                                          : "English: " + seed.target_word + "\nSpanish: " + seed.source_word;
                CHECK(p.find(shot) != std::string::npos);
            }
        }
        CHECK(kshot_prompts == 6);
    }

    TEST_CASE("mining is deterministic under concurrency")
    {
        DictionaryModel llm({{"gato", {"cat", "dog"}}, {"perro", {"dog"}}, {"cat", {"gato"}}, {"dog", {"perro"}}});
        auto config = small_config();
        config.concurrency = 4;
        const auto src = vocab(kSpa, {"gato", "perro"});
        const auto tgt = vocab(kEng, {"cat", "dog"});
        const auto a = mine_words(src, tgt, config, llm, length_sim);
        const auto b = mine_words(src, tgt, config, llm, length_sim);
        CHECK(a.refined == b.refined);
        CHECK(a.zero_shot == b.zero_shot);
    }

    TEST_CASE("no consistent pairs is a data error")
    {
        DictionaryModel llm(std::map<std::string, std::vector<std::string>>{{"gato", {"cat"}}});
        CHECK_THROWS_AS(mine_words(vocab(kSpa, {"gato"}), vocab(kEng, {"cat"}), small_config(), llm, length_sim),
                        DataError);
    }

    TEST_CASE("lexicon TSV round trip")
    {
        const std::vector<WordPair> pairs = {{"gato", "cat", 0.875, Provenance::k_shot},
                                             {"perro", "dog", std::nullopt, Provenance::zero_shot}};
        const auto tsv = to_tsv(pairs);
        CHECK(tsv == "gato\tcat\t0.875000\tk_shot\nperro\tdog\t\tzero_shot\n");
        CHECK(from_tsv(tsv) == pairs);
        CHECK_THROWS_AS(from_tsv("a\tb\n"), DataError);
        CHECK_THROWS_AS(from_tsv("a\tb\tx\tk_shot\n"), DataError);
    }
}
