#include "iclmine/pipeline.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/http_backend.hpp"
#include "iclmine/io.hpp"
#include "iclmine/mock_backends.hpp"
#include "iclmine/parallel.hpp"
#include "iclmine/prompts.hpp"
#include "iclmine/sentence_mining.hpp"
#include "iclmine/text.hpp"
#include "iclmine/w2w.hpp"
#include "iclmine/word_mining.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <numeric>
#include <unistd.h>

namespace iclmine::pipeline {

namespace fs = std::filesystem;
using config::Policy;

std::vector<backends::ScoredCompletion> CountingLanguageModel::generate(const backends::GenerationRequest& request)
{
    ++calls_;
    return inner_.generate(request);
}

backends::EmbeddingVector CountingEmbeddingModel::embed(std::string_view text)
{
    ++calls_;
    return inner_.embed(text);
}

BackendStack::BackendStack(const config::PipelineConfig& config)
{
    const auto& b = config.backend;
    if (b.kind == config::BackendKind::mock) {
        auto fixtures = backends::load_fixtures(b.mock_fixture);
        llm_ = std::make_unique<backends::FixtureLanguageModel>(std::move(fixtures.completions));
        identity_["llm"] = llm_->id();
        identity_["llm_fixture"] = io::sha256_file(b.mock_fixture);
        if (b.embedding_fixture.empty()) {
            embedder_ = std::make_unique<backends::TrigramEmbeddingModel>(static_cast<std::size_t>(b.embedding_dim));
        } else {
            auto vectors = backends::load_fixtures(b.embedding_fixture);
            embedder_ = std::make_unique<backends::FixtureEmbeddingModel>(std::move(vectors.vectors));
            identity_["embedding_fixture"] = io::sha256_file(b.embedding_fixture);
        }
    } else {
        backends::HttpSettings settings;
        settings.base_url = b.base_url;
        settings.model = b.model;
        settings.embedding_model = b.embedding_model;
        settings.api_key = backends::api_key_from_env();
        settings.max_attempts = b.max_attempts;
        settings.timeout = std::chrono::seconds(b.timeout_seconds);
        settings.max_in_flight = b.concurrency;
        llm_ = std::make_unique<backends::HttpLanguageModel>(settings);
        embedder_ = std::make_unique<backends::HttpEmbeddingModel>(settings);
        identity_["llm"] = llm_->id();
    }
    identity_["embedding"] = embedder_->id();
    wire(config);
}

BackendStack::BackendStack(const config::PipelineConfig& config,
                           std::unique_ptr<backends::LanguageModel> llm,
                           std::unique_ptr<backends::EmbeddingModel> embedder,
                           nlohmann::json identity)
    : llm_(std::move(llm)), embedder_(std::move(embedder)), identity_(std::move(identity))
{
    wire(config);
}

void BackendStack::wire(const config::PipelineConfig& config)
{
    const auto& b = config.backend;
    counting_llm_ = std::make_unique<CountingLanguageModel>(*llm_);
    counting_embedder_ = std::make_unique<CountingEmbeddingModel>(*embedder_);
    const auto cache_root = b.cache_dir.empty() ? config.output_dir / "cache" : b.cache_dir;
    cache_ = std::make_unique<backends::ResponseCache>(cache_root);
    cached_llm_ = std::make_unique<backends::CachedLanguageModel>(*counting_llm_, *cache_);
    cached_embedder_ = std::make_unique<backends::CachedEmbeddingModel>(*counting_embedder_, *cache_);
    scorer_ = std::make_unique<backends::SimilarityScorer>(*cached_embedder_);
}

nlohmann::json BackendStack::identity() const
{
    return identity_;
}

RunLock::RunLock(fs::path path) : path_(std::move(path))
{
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            const auto pid = std::to_string(::getpid()) + "\n";
            const auto written = ::write(fd, pid.data(), pid.size());
            ::close(fd);
            if (written != static_cast<ssize_t>(pid.size())) {
                throw DataError("cannot write lock file " + path_.string());
            }
            return;
        }
        if (errno != EEXIST) {
            throw DataError("cannot create lock file " + path_.string() + ": " + std::strerror(errno));
        }
        std::string holder;
        try {
            holder = text::trim(io::read_file(path_));
        } catch (const DataError&) {
        }
        const long pid = holder.empty() ? 0 : std::strtol(holder.c_str(), nullptr, 10);
        if (pid > 0 && (::kill(static_cast<pid_t>(pid), 0) == 0 || errno == EPERM)) {
            throw ConfigError(fmt::format("run directory {} is in use by process {}", path_.parent_path().string(), pid));
        }
        spdlog::warn("removing stale lock {} (process {} is gone)", path_.string(), holder);
        fs::remove(path_);
    }
    throw ConfigError("could not acquire lock " + path_.string());
}

RunLock::~RunLock()
{
    std::error_code ec;
    fs::remove(path_, ec);
}

namespace files {

std::string hypothesis(Policy policy)
{
    return "hyp." + config::to_string(policy) + ".txt";
}

std::string audit(Policy policy)
{
    return "audit." + config::to_string(policy) + ".jsonl";
}

std::string report(Policy policy)
{
    return "report." + config::to_string(policy) + ".json";
}

}  // namespace files

namespace {

std::vector<fs::path> data_inputs(const config::PipelineConfig& c)
{
    std::vector<fs::path> inputs = {c.source_vocab, c.target_vocab, c.unlabeled, c.test_source, c.test_target};
    for (const auto& p : {c.w2w_source, c.gold_source, c.gold_target, c.metrics.bleu.subword_vocab}) {
        if (!p.empty()) {
            inputs.push_back(p);
        }
    }
    return inputs;
}

nlohmann::json hash_inputs(const std::vector<fs::path>& inputs)
{
    nlohmann::json out = nlohmann::json::object();
    for (const auto& p : inputs) {
        out[p.filename().string()] = io::sha256_file(p);
    }
    return out;
}

std::string manifest_name(const std::string& stage)
{
    return stage + ".manifest.json";
}

bool is_mined_policy(Policy p)
{
    return p == Policy::random || p == Policy::topk || p == Policy::topk_bm25;
}

}  // namespace

std::string run_name(const config::PipelineConfig& config, const nlohmann::json& backend_identity)
{
    const nlohmann::json key = {
        {"constants", config::constants_json(config)},
        {"inputs", hash_inputs(data_inputs(config))},
        {"backend", backend_identity},
    };
    return "run-" + io::sha256_hex(key.dump()).substr(0, 12);
}

namespace {

config::PipelineConfig validated(config::PipelineConfig config)
{
    config::validate(config);
    return config;
}

}  // namespace

Runner::Runner(config::PipelineConfig config) : Runner(validated(std::move(config)), nullptr)
{
}

Runner::Runner(config::PipelineConfig config, std::unique_ptr<BackendStack> backends)
    : config_(validated(std::move(config))),
      source_(corpus::make_language(config_.source_lang, config_.source_name)),
      target_(corpus::make_language(config_.target_lang, config_.target_name)),
      backends_(backends ? std::move(backends) : std::make_unique<BackendStack>(config_))
{
    run_dir_ = config_.output_dir / run_name(config_, backends_->identity());
    fs::create_directories(run_dir_);
    lock_ = std::make_unique<RunLock>(run_dir_ / "run.lock");
    io::write_file_atomic(run_dir_ / "config.json", nlohmann::json{{"constants", config::constants_json(config_)},
                                                                    {"backend", backends_->identity()},
                                                                    {"inputs", hash_inputs(data_inputs(config_))}}
                                                            .dump(2) +
                                                        "\n");
    spdlog::info("run directory {}", run_dir_.string());
}

nlohmann::json Runner::manifest_for(const std::string& stage, const std::vector<fs::path>& inputs) const
{
    return {
        {"stage", stage},
        {"inputs", hash_inputs(inputs)},
        {"constants", config::constants_json(config_)},
        {"backend", backends_->identity()},
        {"seed", config_.seed},
    };
}

bool Runner::stage_complete(const std::string& stage) const
{
    const auto path = run_dir_ / manifest_name(stage);
    if (!fs::exists(path)) {
        return false;
    }
    try {
        const auto manifest = nlohmann::json::parse(io::read_file(path));
        for (const auto& [name, digest] : manifest.at("outputs").items()) {
            const auto output = run_dir_ / name;
            if (!fs::exists(output) || io::sha256_file(output) != digest.get<std::string>()) {
                return false;
            }
        }
        return true;
    } catch (const nlohmann::json::exception&) {
        return false;
    }
}

bool Runner::up_to_date(const std::string& stage, const nlohmann::json& expected) const
{
    const auto path = run_dir_ / manifest_name(stage);
    if (!fs::exists(path)) {
        return false;
    }
    if (!stage_complete(stage)) {
        spdlog::warn("stage {}: outputs are missing or modified; re-running and replacing them", stage);
        return false;
    }
    auto recorded = nlohmann::json::parse(io::read_file(path));
    recorded.erase("outputs");
    if (recorded != expected) {
        spdlog::warn("stage {}: inputs changed since the recorded run; re-running and replacing its outputs", stage);
        return false;
    }
    spdlog::info("stage {}: up to date, skipping", stage);
    return true;
}

void Runner::write_manifest(const std::string& stage, nlohmann::json manifest, const std::vector<std::string>& outputs)
{
    nlohmann::json digests = nlohmann::json::object();
    for (const auto& name : outputs) {
        digests[name] = io::sha256_file(run_dir_ / name);
    }
    manifest["outputs"] = std::move(digests);
    io::write_file_atomic(run_dir_ / manifest_name(stage), manifest.dump(2) + "\n");
}

void Runner::require_stage(const std::string& stage, const std::string& producer) const
{
    if (!stage_complete(stage)) {
        throw DataError(fmt::format("stage {} has not completed in {}; run {} first or pass --auto", stage,
                                    run_dir_.string(), producer));
    }
}

StageStatus Runner::mine_words()
{
    const std::string stage = "words";
    const auto manifest = manifest_for(stage, {config_.source_vocab, config_.target_vocab});
    if (up_to_date(stage, manifest)) {
        return StageStatus::skipped;
    }
    const auto vocab_src = corpus::load_vocabulary(config_.source_vocab, source_, config_.vocab_size);
    const auto vocab_tgt = corpus::load_vocabulary(config_.target_vocab, target_, config_.vocab_size);

    word_mining::MiningConfig mining;
    mining.n = config_.n;
    mining.k_wp = config_.k_wp;
    mining.temperature = config_.temperature;
    mining.seed = config_.seed;
    mining.max_new_tokens = config_.word_max_tokens;
    mining.concurrency = config_.backend.concurrency;
    mining.templates = config_.templates;
    auto& scorer = backends_->scorer();
    const auto result = word_mining::mine_words(vocab_src, vocab_tgt, mining, backends_->llm(),
                                                [&](std::string_view x, std::string_view y) { return scorer.sim(x, y); });

    io::write_file_atomic(path(files::lexicon_zero_shot), word_mining::to_tsv(result.zero_shot));
    io::write_file_atomic(path(files::lexicon), word_mining::to_tsv(result.refined));
    write_manifest(stage, manifest, {files::lexicon_zero_shot, files::lexicon});
    spdlog::info("mined {} word pairs ({} after zero-shot)", result.refined.size(), result.zero_shot.size());
    return StageStatus::ran;
}

namespace {

std::vector<std::string> w2w_sentences(const config::PipelineConfig& c, const corpus::LanguageSpec& source,
                                       const corpus::LanguageSpec& target)
{
    if (!c.w2w_source.empty()) {
        return corpus::load_monolingual(c.w2w_source, source).sentences;
    }
    return corpus::load_parallel(c.test_source, c.test_target, source, target).sources();
}

w2w::W2wSettings w2w_settings(const config::PipelineConfig& c)
{
    w2w::W2wSettings settings;
    settings.templates = c.templates;
    settings.max_new_tokens = c.word_max_tokens;
    settings.concurrency = c.backend.concurrency;
    return settings;
}

}  // namespace

StageStatus Runner::build_w2w(bool auto_prerequisites)
{
    if (auto_prerequisites) {
        mine_words();
    }
    require_stage("words", "mine-words");
    const std::string stage = "w2w";
    const auto sentence_file = config_.w2w_source.empty() ? config_.test_source : config_.w2w_source;
    const auto manifest = manifest_for(stage, {sentence_file, path(files::lexicon)});
    if (up_to_date(stage, manifest)) {
        return StageStatus::skipped;
    }
    const auto lexicon = word_mining::read_lexicon(path(files::lexicon));
    w2w::WordTranslator translator(lexicon, source_, target_, w2w_settings(config_), backends_->llm());
    const auto corpus = w2w::build_w2w(w2w_sentences(config_, source_, target_), translator);
    io::write_file_atomic(path(files::w2w), w2w::to_jsonl(corpus));
    write_manifest(stage, manifest, {files::w2w});
    return StageStatus::ran;
}

StageStatus Runner::mine_sentences(bool auto_prerequisites)
{
    if (auto_prerequisites) {
        build_w2w(true);
    }
    require_stage("w2w", "mine-words");
    const std::string stage = "sentences";
    const auto manifest = manifest_for(stage, {config_.unlabeled, path(files::w2w)});
    if (up_to_date(stage, manifest)) {
        return StageStatus::skipped;
    }
    const auto unlabeled = corpus::load_monolingual(config_.unlabeled, target_);
    const auto w2w_corpus = w2w::from_jsonl(io::read_file(path(files::w2w)));

    sentence_mining::MiningSettings settings;
    settings.k = config_.k;
    settings.iterations = config_.iterations;
    settings.shot_strategy = config_.shot_selection;
    settings.generation.templates = config_.templates;
    settings.generation.mode = config::sentence_mode(config_);
    settings.generation.max_new_tokens = config_.sentence_max_tokens;
    settings.generation.concurrency = config_.backend.concurrency;
    auto& scorer = backends_->scorer();
    const auto pool =
        sentence_mining::mine_examples(unlabeled, w2w_corpus, source_, target_, settings, backends_->llm(),
                                       [&](std::string_view x, std::string_view y) { return scorer.sim(x, y); });
    io::write_file_atomic(path(files::pool), sentence_mining::to_jsonl(pool));
    write_manifest(stage, manifest, {files::pool});
    spdlog::info("pool: {} pairs from {} unlabeled sentences", pool.pairs.size(), unlabeled.sentences.size());
    return StageStatus::ran;
}

namespace {

struct QueryResult {
    std::string hypothesis;
    nlohmann::json audit;
    bool failed = false;
};

std::string join_lines(const std::vector<std::string>& lines)
{
    std::string out;
    for (const auto& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace

StageStatus Runner::translate(Policy policy, bool auto_prerequisites)
{
    if (!config::policy_available(config_, policy)) {
        throw ConfigError("policy " + config::to_string(policy) + " needs data.gold_source and data.gold_target");
    }
    std::vector<fs::path> inputs = {config_.test_source, config_.test_target};
    if (policy == Policy::uw2w) {
        if (auto_prerequisites) {
            mine_words();
        }
        require_stage("words", "mine-words");
        inputs.push_back(path(files::lexicon));
    } else if (is_mined_policy(policy)) {
        if (auto_prerequisites) {
            mine_sentences(true);
        }
        require_stage("sentences", "mine-sentences");
        inputs.push_back(path(files::pool));
    } else if (policy == Policy::gold_kshot || policy == Policy::gold_bm25) {
        inputs.push_back(config_.gold_source);
        inputs.push_back(config_.gold_target);
    }
    const std::string stage = "translate." + config::to_string(policy);
    const auto manifest = manifest_for(stage, inputs);
    if (up_to_date(stage, manifest)) {
        return StageStatus::skipped;
    }

    const auto test = corpus::load_parallel(config_.test_source, config_.test_target, source_, target_);
    const auto queries = test.sources();
    std::vector<QueryResult> results(queries.size());

    if (policy == Policy::uw2w) {
        const auto lexicon = word_mining::read_lexicon(path(files::lexicon));
        w2w::WordTranslator translator(lexicon, source_, target_, w2w_settings(config_), backends_->llm());
        const auto corpus = w2w::build_w2w(queries, translator);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            results[i].hypothesis = corpus.pairs[i].second;
            results[i].audit = {{"index", i}, {"copied_through", corpus.stats[i].copied_through}};
        }
    } else {
        sentence_mining::MinedPool pool;
        if (is_mined_policy(policy)) {
            pool = sentence_mining::pool_from_jsonl(io::read_file(path(files::pool)));
        } else if (policy != Policy::zero_shot) {
            pool = sentence_mining::gold_pool(
                corpus::load_parallel(config_.gold_source, config_.gold_target, source_, target_));
        }
        sentence_mining::TopKBm25Policy bm25_policy{config_.k, config_.tau, config_.fallback_m, config_.bm25};
        std::vector<std::size_t> all_indices(pool.pairs.size());
        std::iota(all_indices.begin(), all_indices.end(), std::size_t{0});

        auto choose = [&](const std::string& query) -> sentence_mining::Selection {
            switch (policy) {
            case Policy::random:
            case Policy::gold_kshot:
                return sentence_mining::select_random(pool, config_.k);
            case Policy::topk:
                return sentence_mining::select_topk(pool, config_.k);
            case Policy::topk_bm25:
                return sentence_mining::select_topk_bm25(pool, query, bm25_policy);
            case Policy::gold_bm25:
                return sentence_mining::rank_bm25(pool, all_indices, query, config_.k, config_.bm25);
            default:
                return {};
            }
        };
        const bool ranked = policy == Policy::topk || policy == Policy::topk_bm25 || policy == Policy::gold_bm25;

        parallel_for(queries.size(), config_.backend.concurrency, [&](std::size_t i) {
            const auto selection = policy == Policy::zero_shot ? sentence_mining::Selection{} : choose(queries[i]);
            auto shots = sentence_mining::materialize(pool, selection);
            if (ranked) {
                shots = sentence_mining::prompt_order(std::move(shots), config_.best_example_last);
            }
            std::vector<prompts::Example> examples;
            for (const auto& s : shots) {
                examples.emplace_back(s.source_text, s.target_text);
            }
            auto& audit = results[i].audit;
            audit = {{"index", i}, {"examples", selection.indices}};
            if (!selection.bm25_scores.empty()) {
                audit["bm25"] = selection.bm25_scores;
            }
            if (policy == Policy::topk_bm25) {
                audit["fallback"] = selection.fallback;
                audit["candidates"] = selection.candidate_count;
            }

            backends::GenerationRequest request;
            request.prompt = prompts::sentence_kshot(config_.templates, source_, target_, examples, queries[i]);
            request.mode = config::sentence_mode(config_);
            request.stop = backends::StopCondition::newline();
            request.max_new_tokens = config_.sentence_max_tokens;
            try {
                const auto completions = backends_->llm().generate(request);
                if (completions.empty()) {
                    spdlog::warn("{}: empty translation for test sentence {}", config::to_string(policy), i + 1);
                } else {
                    results[i].hypothesis = completions.front().text;
                }
            } catch (const BackendError& e) {
                spdlog::warn("{}: translation of test sentence {} failed: {}", config::to_string(policy), i + 1,
                             e.what());
                results[i].failed = true;
                audit["error"] = e.what();
            }
        });
        const auto failures =
            std::count_if(results.begin(), results.end(), [](const QueryResult& r) { return r.failed; });
        if (!queries.empty() && static_cast<std::size_t>(failures) * 2 > queries.size()) {
            throw BackendError(fmt::format("{}: {} of {} translations failed", config::to_string(policy), failures,
                                           queries.size()));
        }
    }

    std::vector<std::string> hypotheses;
    std::string audit;
    for (auto& r : results) {
        // A hypothesis must stay on one line to keep the file aligned with the references.
        hypotheses.push_back(text::normalize_spaces(r.hypothesis));
        audit += r.audit.dump() + "\n";
    }
    io::write_file_atomic(path(files::hypothesis(policy)), join_lines(hypotheses));
    io::write_file_atomic(path(files::audit(policy)), audit);
    write_manifest(stage, manifest, {files::hypothesis(policy), files::audit(policy)});
    return StageStatus::ran;
}

StageStatus Runner::evaluate(Policy policy, bool auto_prerequisites)
{
    const auto producer = "translate." + config::to_string(policy);
    if (auto_prerequisites) {
        translate(policy, true);
    }
    require_stage(producer, "translate --policy " + config::to_string(policy));
    const std::string stage = "evaluate." + config::to_string(policy);
    const auto manifest =
        manifest_for(stage, {path(files::hypothesis(policy)), config_.test_source, config_.test_target});
    if (up_to_date(stage, manifest)) {
        return StageStatus::skipped;
    }
    const auto test = corpus::load_parallel(config_.test_source, config_.test_target, source_, target_);
    const auto hypotheses = text::split_lines(io::read_file(path(files::hypothesis(policy))));
    auto report = metrics::evaluate(hypotheses, test.targets(), config_.metrics);
    report.source = source_.code();
    report.target = target_.code();
    report.system = config::to_string(policy);
    io::write_file_atomic(path(files::report(policy)), metrics::to_json(report) + "\n");
    write_manifest(stage, manifest, {files::report(policy)});
    return StageStatus::ran;
}

void Runner::run_all(const std::optional<std::vector<Policy>>& only)
{
    const auto policies = only ? *only : config_.policies;
    mine_words();
    build_w2w(false);
    mine_sentences(false);
    nlohmann::json reports = nlohmann::json::array();
    std::string table = fmt::format("{:<11} {}\n", "system", "direction  chrF++/spBLEU");
    for (auto policy : policies) {
        translate(policy, false);
        evaluate(policy, false);
        auto report = nlohmann::json::parse(io::read_file(path(files::report(policy))));
        metrics::EvalReport row;
        row.source = report.at("source").get<std::string>();
        row.target = report.at("target").get<std::string>();
        row.chrf_pp = report.at("chrf_pp").get<double>();
        row.bleu = report.at("bleu").get<double>();
        table += fmt::format("{:<11} {}\n", config::to_string(policy), metrics::format_row(row));
        reports.push_back(std::move(report));
    }
    io::write_file_atomic(path(files::report_json), reports.dump(2) + "\n");
    io::write_file_atomic(path(files::report_txt), table);
}

}  // namespace iclmine::pipeline
