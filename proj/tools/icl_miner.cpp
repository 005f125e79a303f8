#include "iclmine/config.hpp"
#include "iclmine/errors.hpp"
#include "iclmine/metrics.hpp"
#include "iclmine/pipeline.hpp"
#include "iclmine/io.hpp"
#include "iclmine/sentence_mining.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace iclmine;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::string> backend;
    std::optional<std::string> cache_dir;
    std::optional<std::int64_t> seed;
    std::optional<int> concurrency;
    bool verbose = false;
    bool quiet = false;
};

config::PipelineConfig load_config(const GlobalOptions& g)
{
    if (g.config_path.empty()) {
        throw ConfigError("--config is required");
    }
    auto c = config::load(g.config_path);
    if (g.backend) {
        c.backend.kind = config::backend_kind_from_string(*g.backend);
    }
    if (g.cache_dir) {
        c.backend.cache_dir = fs::absolute(*g.cache_dir).lexically_normal();
    }
    if (g.seed) {
        c.seed = *g.seed;
    }
    if (g.concurrency) {
        c.backend.concurrency = *g.concurrency;
    }
    return c;
}

void report_calls(pipeline::Runner& runner)
{
    fmt::print(stderr, "backend calls: llm={} embedding={}\n", runner.backends().llm_calls(),
               runner.backends().embedding_calls());
}

std::vector<config::Policy> parse_policies(const std::vector<std::string>& names)
{
    std::vector<config::Policy> out;
    for (const auto& n : names) {
        out.push_back(config::policy_from_string(n));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("icl-miner"));
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Mine in-context examples for unsupervised machine translation"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "Pipeline config (INI)");
    app.add_option("--backend", g.backend, "Override backend.kind")->check(CLI::IsMember({"http", "mock"}));
    app.add_option("--cache-dir", g.cache_dir, "Override backend.cache_dir");
    app.add_option("--seed", g.seed, "Override run.seed");
    app.add_option("--concurrency", g.concurrency, "Override backend.concurrency");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");
    app.add_flag("-q,--quiet", g.quiet, "Warnings and errors only");

    auto* words = app.add_subcommand("mine-words", "Mine and refine the word lexicon");

    bool auto_prereq = false;
    auto* sentences = app.add_subcommand("mine-sentences", "Build the w2w corpus and back-translate D_U");
    sentences->add_flag("--auto", auto_prereq, "Run missing earlier stages first");

    std::vector<std::string> translate_policies;
    auto* translate = app.add_subcommand("translate", "Translate the test set with one or more policies");
    translate->add_option("--policy", translate_policies, "zero_shot, uw2w, random, topk, topk_bm25, gold_kshot, gold_bm25")
        ->required();
    translate->add_flag("--auto", auto_prereq, "Run missing earlier stages first");

    std::string hyp_path;
    std::string ref_path;
    std::string report_path;
    auto* evaluate = app.add_subcommand("evaluate", "Score a hypothesis file against references");
    evaluate->add_option("--hyp", hyp_path, "Hypothesis file, one sentence per line")->required();
    evaluate->add_option("--ref", ref_path, "Reference file, line-aligned with --hyp")->required();
    evaluate->add_option("--output", report_path, "Write the JSON report here");

    std::vector<std::string> run_policies;
    auto* run_all = app.add_subcommand("run-all", "Run every stage and evaluate the configured policies");
    run_all->add_option("--policy", run_policies, "Restrict to these policies");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    spdlog::set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*evaluate) {
            metrics::MetricConfigs configs;
            std::string source = "src";
            std::string target = "tgt";
            if (!g.config_path.empty()) {
                const auto c = load_config(g);
                configs = c.metrics;
                source = c.source_lang;
                target = c.target_lang;
            }
            auto report = metrics::evaluate_corpus(hyp_path, ref_path, configs);
            report.source = source;
            report.target = target;
            report.system = fs::path(hyp_path).filename().string();
            if (!report_path.empty()) {
                io::write_file_atomic(report_path, metrics::to_json(report) + "\n");
            }
            fmt::print("{}\n", metrics::format_row(report));
            return 0;
        }

        pipeline::Runner runner(load_config(g));
        if (*words) {
            runner.mine_words();
            fmt::print("{}\n", runner.path(pipeline::files::lexicon).string());
        } else if (*sentences) {
            runner.build_w2w(auto_prereq);
            runner.mine_sentences(auto_prereq);
            const auto pool = sentence_mining::pool_from_jsonl(io::read_file(runner.path(pipeline::files::pool)));
            fmt::print(stderr, "pool: {} pairs\n", pool.pairs.size());
            fmt::print("{}\n", runner.path(pipeline::files::pool).string());
        } else if (*translate) {
            for (auto policy : parse_policies(translate_policies)) {
                runner.translate(policy, auto_prereq);
                fmt::print("{}\n", runner.path(pipeline::files::hypothesis(policy)).string());
            }
        } else if (*run_all) {
            std::optional<std::vector<config::Policy>> only;
            if (!run_policies.empty()) {
                only = parse_policies(run_policies);
            }
            runner.run_all(only);
            fmt::print("{}", io::read_file(runner.path(pipeline::files::report_txt)));
        }
        report_calls(runner);
        return 0;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
