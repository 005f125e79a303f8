#include "iclmine/word_mining.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/io.hpp"
#include "iclmine/parallel.hpp"
#include "iclmine/text.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <set>

namespace iclmine::word_mining {

std::string to_string(Provenance p)
{
    return p == Provenance::zero_shot ? "zero_shot" : "k_shot";
}

Provenance provenance_from_string(std::string_view s)
{
    if (s == "zero_shot") {
        return Provenance::zero_shot;
    }
    if (s == "k_shot") {
        return Provenance::k_shot;
    }
    throw DataError("unknown provenance '" + std::string(s) + "'");
}

void CandidatePool::set(const std::string& word, std::vector<Candidate> candidates)
{
    if (candidates.empty()) {
        return;
    }
    if (auto it = index_.find(word); it != index_.end()) {
        entries_[it->second].candidates = std::move(candidates);
        return;
    }
    index_.emplace(word, entries_.size());
    entries_.push_back({word, std::move(candidates)});
}

const std::vector<Candidate>* CandidatePool::find(std::string_view word) const
{
    auto it = index_.find(std::string(word));
    return it == index_.end() ? nullptr : &entries_[it->second].candidates;
}

bool CandidatePool::contains(std::string_view word, std::string_view candidate) const
{
    const auto* list = find(word);
    if (list == nullptr) {
        return false;
    }
    return std::any_of(list->begin(), list->end(), [&](const Candidate& c) { return c.word == candidate; });
}

std::size_t CandidatePool::pair_count() const
{
    std::size_t total = 0;
    for (const auto& e : entries_) {
        total += e.candidates.size();
    }
    return total;
}

void validate(const MiningConfig& config)
{
    if (config.n < 1) {
        throw ConfigError("mining.n must be at least 1");
    }
    if (config.k_wp < 1) {
        throw ConfigError("mining.k_wp must be at least 1");
    }
    if (!(config.temperature > 0.0)) {
        throw ConfigError("mining.temperature must be positive");
    }
    if (config.max_new_tokens < 1) {
        throw ConfigError("word max_new_tokens must be positive");
    }
    prompts::validate(config.templates);
}

namespace {

struct QueryOutcome {
    std::vector<Candidate> candidates;
    bool failed = false;
};

/// Issue one request per query word and keep candidates found in `filter`.
CandidatePool run_queries(Direction direction,
                          const std::vector<std::string>& words,
                          const corpus::Vocabulary& filter,
                          const std::function<backends::GenerationRequest(const std::string&)>& make_request,
                          const MiningConfig& config,
                          backends::LanguageModel& llm,
                          std::string_view stage)
{
    std::vector<QueryOutcome> outcomes(words.size());
    parallel_for(words.size(), config.concurrency, [&](std::size_t i) {
        std::vector<backends::ScoredCompletion> completions;
        try {
            completions = llm.generate(make_request(words[i]));
        } catch (const BackendError& e) {
            spdlog::warn("{}: '{}' skipped: {}", stage, words[i], e.what());
            outcomes[i].failed = true;
            return;
        }
        std::set<std::string> seen;
        for (const auto& completion : completions) {
            auto canonical = filter.canonical(text::extract_word(completion.text));
            if (canonical && seen.insert(*canonical).second) {
                outcomes[i].candidates.push_back({std::move(*canonical), completion.sequence_score});
            }
        }
    });

    std::size_t failures = 0;
    CandidatePool pool(direction);
    for (std::size_t i = 0; i < words.size(); ++i) {
        failures += outcomes[i].failed ? 1 : 0;
        pool.set(words[i], std::move(outcomes[i].candidates));
    }
    if (!words.empty() && failures * 2 > words.size()) {
        throw BackendError(fmt::format("{} aborted: {} of {} requests failed", stage, failures, words.size()));
    }
    return pool;
}

std::vector<prompts::Example> shot_examples(const std::vector<WordPair>& shots, bool reversed)
{
    std::vector<prompts::Example> out;
    out.reserve(shots.size());
    for (const auto& p : shots) {
        out.emplace_back(reversed ? p.target_word : p.source_word, reversed ? p.source_word : p.target_word);
    }
    return out;
}

}  // namespace

CandidatePool mine_forward(const corpus::Vocabulary& vocab_src,
                           const corpus::Vocabulary& vocab_tgt,
                           const MiningConfig& config,
                           backends::LanguageModel& llm,
                           const std::vector<WordPair>& shots)
{
    validate(config);
    if (vocab_src.size() == 0) {
        throw DataError("mine_forward: empty source vocabulary");
    }
    const auto& src = vocab_src.language();
    const auto& tgt = vocab_tgt.language();
    const auto examples = shot_examples(shots, false);
    auto make_request = [&](const std::string& word) {
        backends::GenerationRequest request;
        request.prompt = shots.empty() ? prompts::word_zero_shot(config.templates, src, tgt, word)
                                       : prompts::word_kshot(config.templates, src, tgt, examples, word);
        request.num_samples = config.n;
        request.mode = backends::RandomSampling{config.temperature, config.seed};
        request.stop = backends::StopCondition::whitespace();
        request.max_new_tokens = config.max_new_tokens;
        return request;
    };
    return run_queries(Direction::source_to_target, vocab_src.words(), vocab_tgt, make_request, config, llm,
                       "forward word mining");
}

CandidatePool mine_backward(const CandidatePool& forward,
                            const corpus::Vocabulary& vocab_src,
                            const corpus::Vocabulary& vocab_tgt,
                            const MiningConfig& config,
                            backends::LanguageModel& llm,
                            const std::vector<WordPair>& shots)
{
    validate(config);
    if (forward.empty()) {
        throw DataError("mine_backward: forward pool is empty");
    }
    std::vector<std::string> targets;
    std::set<std::string> seen;
    for (const auto& entry : forward.entries()) {
        for (const auto& c : entry.candidates) {
            if (seen.insert(c.word).second) {
                targets.push_back(c.word);
            }
        }
    }
    const auto& src = vocab_src.language();
    const auto& tgt = vocab_tgt.language();
    const auto examples = shot_examples(shots, true);
    auto make_request = [&](const std::string& word) {
        backends::GenerationRequest request;
        request.prompt = shots.empty() ? prompts::word_zero_shot(config.templates, tgt, src, word)
                                       : prompts::word_kshot(config.templates, tgt, src, examples, word);
        request.num_samples = 1;
        request.mode = backends::Greedy{};
        request.stop = backends::StopCondition::whitespace();
        request.max_new_tokens = config.max_new_tokens;
        return request;
    };
    return run_queries(Direction::target_to_source, targets, vocab_src, make_request, config, llm,
                       "backward word mining");
}

std::vector<WordPair> consistency_filter(const CandidatePool& forward, const CandidatePool& backward, Provenance provenance)
{
    std::vector<WordPair> out;
    std::set<std::pair<std::string, std::string>> emitted;
    for (const auto& entry : forward.entries()) {
        const auto source = text::normalize_word(entry.word);
        for (const auto& candidate : entry.candidates) {
            const auto* back = backward.find(candidate.word);
            if (back == nullptr) {
                continue;
            }
            const bool round_trip = std::any_of(back->begin(), back->end(), [&](const Candidate& b) {
                return text::normalize_word(b.word) == source;
            });
            if (round_trip && emitted.emplace(entry.word, candidate.word).second) {
                out.push_back({entry.word, candidate.word, std::nullopt, provenance});
            }
        }
    }
    return out;
}

std::vector<WordPair> rank_and_select(std::vector<WordPair> pairs, const SimFn& sim, int k_wp, const corpus::Vocabulary& vocab_src)
{
    if (k_wp < 1) {
        throw ConfigError("k_wp must be at least 1");
    }
    if (pairs.empty()) {
        throw DataError("rank_and_select: no word pairs to rank");
    }
    struct Keyed {
        WordPair pair;
        std::size_t rank;
        std::size_t order;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto& p = pairs[i];
        p.similarity = sim(p.source_word, p.target_word);
        const auto rank = vocab_src.rank(p.source_word).value_or(std::numeric_limits<std::size_t>::max());
        keyed.push_back({std::move(p), rank, i});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (*a.pair.similarity != *b.pair.similarity) {
            return *a.pair.similarity > *b.pair.similarity;
        }
        if (a.rank != b.rank) {
            return a.rank < b.rank;
        }
        return a.order < b.order;
    });
    const auto keep = std::min(keyed.size(), static_cast<std::size_t>(k_wp));
    if (keyed.size() < static_cast<std::size_t>(k_wp)) {
        spdlog::warn("only {} consistent word pairs available (k_wp = {})", keyed.size(), k_wp);
    }
    std::vector<WordPair> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        out.push_back(std::move(keyed[i].pair));
    }
    return out;
}

namespace {

std::vector<WordPair> mining_round(const corpus::Vocabulary& vocab_src,
                                   const corpus::Vocabulary& vocab_tgt,
                                   const MiningConfig& config,
                                   backends::LanguageModel& llm,
                                   const SimFn& sim,
                                   const std::vector<WordPair>& shots)
{
    const auto provenance = shots.empty() ? Provenance::zero_shot : Provenance::k_shot;
    const auto forward = mine_forward(vocab_src, vocab_tgt, config, llm, shots);
    spdlog::info("{} forward pool: {} words, {} pairs", to_string(provenance), forward.entries().size(),
                 forward.pair_count());
    if (forward.empty()) {
        spdlog::warn("{} forward pool is empty", to_string(provenance));
        return {};
    }
    const auto backward = mine_backward(forward, vocab_src, vocab_tgt, config, llm, shots);
    auto consistent = consistency_filter(forward, backward, provenance);
    spdlog::info("{} consistent pairs: {}", to_string(provenance), consistent.size());
    if (consistent.empty()) {
        return {};
    }
    return rank_and_select(std::move(consistent), sim, config.k_wp, vocab_src);
}

}  // namespace

std::vector<WordPair> mine_zero_shot(const corpus::Vocabulary& vocab_src,
                                     const corpus::Vocabulary& vocab_tgt,
                                     const MiningConfig& config,
                                     backends::LanguageModel& llm,
                                     const SimFn& sim)
{
    return mining_round(vocab_src, vocab_tgt, config, llm, sim, {});
}

std::vector<WordPair> refine_kshot(const std::vector<WordPair>& seed_pairs,
                                   const corpus::Vocabulary& vocab_src,
                                   const corpus::Vocabulary& vocab_tgt,
                                   const MiningConfig& config,
                                   backends::LanguageModel& llm,
                                   const SimFn& sim)
{
    if (seed_pairs.empty()) {
        throw DataError("refine_kshot: no seed pairs");
    }
    return mining_round(vocab_src, vocab_tgt, config, llm, sim, seed_pairs);
}

MiningResult mine_words(const corpus::Vocabulary& vocab_src,
                        const corpus::Vocabulary& vocab_tgt,
                        const MiningConfig& config,
                        backends::LanguageModel& llm,
                        const SimFn& sim)
{
    MiningResult result;
    result.zero_shot = mine_zero_shot(vocab_src, vocab_tgt, config, llm, sim);
    if (result.zero_shot.empty()) {
        throw DataError("word mining produced no consistent pairs; cannot build in-context examples");
    }
    result.refined = refine_kshot(result.zero_shot, vocab_src, vocab_tgt, config, llm, sim);
    if (result.refined.empty()) {
        spdlog::warn("k-shot refinement kept no pairs; falling back to the zero-shot pairs");
        result.refined = result.zero_shot;
    }
    return result;
}

std::string to_tsv(const std::vector<WordPair>& pairs)
{
    std::string out;
    for (const auto& p : pairs) {
        out += fmt::format("{}\t{}\t{}\t{}\n", p.source_word, p.target_word,
                           p.similarity ? fmt::format("{:.6f}", *p.similarity) : std::string(),
                           to_string(p.provenance));
    }
    return out;
}

std::vector<WordPair> from_tsv(std::string_view content)
{
    std::vector<WordPair> pairs;
    const auto lines = text::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = lines[i].find('\t', start);
            fields.push_back(lines[i].substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) {
                break;
            }
            start = tab + 1;
        }
        if (fields.size() != 4 || fields[0].empty() || fields[1].empty()) {
            throw DataError("lexicon line " + std::to_string(i + 1) + ": expected 4 tab-separated fields");
        }
        WordPair p{fields[0], fields[1], std::nullopt, provenance_from_string(fields[3])};
        if (!fields[2].empty()) {
            try {
                p.similarity = std::stod(fields[2]);
            } catch (const std::exception&) {
                throw DataError("lexicon line " + std::to_string(i + 1) + ": bad similarity '" + fields[2] + "'");
            }
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<WordPair> read_lexicon(const std::filesystem::path& path)
{
    return from_tsv(io::read_file(path));
}

}  // namespace iclmine::word_mining
