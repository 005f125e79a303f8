#include "iclmine/config.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/io.hpp"
#include "iclmine/text.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace iclmine::config {

namespace {

const std::vector<std::pair<Policy, std::string_view>> kPolicyNames = {
    {Policy::zero_shot, "zero_shot"}, {Policy::uw2w, "uw2w"},       {Policy::random, "random"},
    {Policy::topk, "topk"},           {Policy::topk_bm25, "topk_bm25"}, {Policy::gold_kshot, "gold_kshot"},
    {Policy::gold_bm25, "gold_bm25"},
};

}  // namespace

std::string to_string(Policy policy)
{
    for (const auto& [p, name] : kPolicyNames) {
        if (p == policy) {
            return std::string(name);
        }
    }
    return "unknown";
}

Policy policy_from_string(std::string_view s)
{
    for (const auto& [p, name] : kPolicyNames) {
        if (name == s) {
            return p;
        }
    }
    throw ConfigError("unknown policy '" + std::string(s) +
                      "' (expected zero_shot, uw2w, random, topk, topk_bm25, gold_kshot or gold_bm25)");
}

const std::vector<Policy>& all_policies()
{
    static const std::vector<Policy> policies = [] {
        std::vector<Policy> out;
        for (const auto& [p, name] : kPolicyNames) {
            out.push_back(p);
        }
        return out;
    }();
    return policies;
}

std::string to_string(BackendKind kind)
{
    return kind == BackendKind::http ? "http" : "mock";
}

BackendKind backend_kind_from_string(std::string_view s)
{
    if (s == "mock") {
        return BackendKind::mock;
    }
    if (s == "http") {
        return BackendKind::http;
    }
    throw ConfigError("unknown backend '" + std::string(s) + "' (expected http or mock)");
}

namespace {

template <typename T>
T parse_number(const std::string& field, const std::string& value)
{
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(fmt::format("{}: '{}' is not a valid number", field, value));
    }
    return out;
}

double parse_real(const std::string& field, const std::string& value)
{
    // from_chars for double is missing from older libstdc++.
    try {
        std::size_t used = 0;
        const double out = std::stod(value, &used);
        if (used == value.size()) {
            return out;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", field, value));
}

bool parse_bool(const std::string& field, const std::string& value)
{
    if (value == "true" || value == "yes" || value == "1") {
        return true;
    }
    if (value == "false" || value == "no" || value == "0") {
        return false;
    }
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", field, value));
}

std::string unescape(const std::string& field, const std::string& value)
{
    std::string out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (value[i] != '\\') {
            out += value[i];
            continue;
        }
        if (++i == value.size()) {
            throw ConfigError(field + ": dangling backslash");
        }
        switch (value[i]) {
        case 'n':
            out += '\n';
            break;
        case 't':
            out += '\t';
            break;
        case '\\':
            out += '\\';
            break;
        default:
            throw ConfigError(fmt::format("{}: unknown escape '\\{}'", field, value[i]));
        }
    }
    return out;
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = text::trim(item);
        if (!item.empty()) {
            items.push_back(item);
        }
    }
    return items;
}

using Setter = std::function<void(PipelineConfig&, const std::string& field, const std::string& value)>;

std::map<std::string, Setter> setters(const std::filesystem::path& base_dir, bool& policies_set)
{
    auto path = [base_dir](std::filesystem::path PipelineConfig::*member) -> Setter {
        return [base_dir, member](PipelineConfig& c, const std::string&, const std::string& v) {
            c.*member = v.empty() ? std::filesystem::path{} : (base_dir / v).lexically_normal();
        };
    };
    auto backend_path = [base_dir](std::filesystem::path BackendConfig::*member) -> Setter {
        return [base_dir, member](PipelineConfig& c, const std::string&, const std::string& v) {
            c.backend.*member = v.empty() ? std::filesystem::path{} : (base_dir / v).lexically_normal();
        };
    };
    auto integer = [](int PipelineConfig::*member) -> Setter {
        return [member](PipelineConfig& c, const std::string& f, const std::string& v) {
            c.*member = parse_number<int>(f, v);
        };
    };
    auto real = [](double PipelineConfig::*member) -> Setter {
        return [member](PipelineConfig& c, const std::string& f, const std::string& v) { c.*member = parse_real(f, v); };
    };
    auto prompt = [](std::string prompts::PromptTemplates::*member) -> Setter {
        return [member](PipelineConfig& c, const std::string& f, const std::string& v) {
            c.templates.*member = unescape(f, v);
        };
    };

    return {
        {"languages.source", [](PipelineConfig& c, const std::string&, const std::string& v) { c.source_lang = v; }},
        {"languages.target", [](PipelineConfig& c, const std::string&, const std::string& v) { c.target_lang = v; }},
        {"languages.source_name", [](PipelineConfig& c, const std::string&, const std::string& v) { c.source_name = v; }},
        {"languages.target_name", [](PipelineConfig& c, const std::string&, const std::string& v) { c.target_name = v; }},

        {"data.source_vocab", path(&PipelineConfig::source_vocab)},
        {"data.target_vocab", path(&PipelineConfig::target_vocab)},
        {"data.unlabeled", path(&PipelineConfig::unlabeled)},
        {"data.test_source", path(&PipelineConfig::test_source)},
        {"data.test_target", path(&PipelineConfig::test_target)},
        {"data.gold_source", path(&PipelineConfig::gold_source)},
        {"data.gold_target", path(&PipelineConfig::gold_target)},
        {"data.w2w_source", path(&PipelineConfig::w2w_source)},
        {"data.vocab_size",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.vocab_size = parse_number<std::size_t>(f, v);
         }},

        {"backend.kind",
         [](PipelineConfig& c, const std::string&, const std::string& v) { c.backend.kind = backend_kind_from_string(v); }},
        {"backend.base_url", [](PipelineConfig& c, const std::string&, const std::string& v) { c.backend.base_url = v; }},
        {"backend.model", [](PipelineConfig& c, const std::string&, const std::string& v) { c.backend.model = v; }},
        {"backend.embedding_model",
         [](PipelineConfig& c, const std::string&, const std::string& v) { c.backend.embedding_model = v; }},
        {"backend.concurrency",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.backend.concurrency = parse_number<int>(f, v);
         }},
        {"backend.max_attempts",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.backend.max_attempts = parse_number<int>(f, v);
         }},
        {"backend.timeout_seconds",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.backend.timeout_seconds = parse_number<int>(f, v);
         }},
        {"backend.cache_dir", backend_path(&BackendConfig::cache_dir)},
        {"backend.mock_fixture", backend_path(&BackendConfig::mock_fixture)},
        {"backend.embedding_fixture", backend_path(&BackendConfig::embedding_fixture)},
        {"backend.embedding_dim",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.backend.embedding_dim = parse_number<int>(f, v);
         }},

        {"mining.n", integer(&PipelineConfig::n)},
        {"mining.k_wp", integer(&PipelineConfig::k_wp)},
        {"mining.k", integer(&PipelineConfig::k)},
        {"mining.tau", real(&PipelineConfig::tau)},
        {"mining.fallback_m", integer(&PipelineConfig::fallback_m)},
        {"mining.iterations", integer(&PipelineConfig::iterations)},
        {"mining.temperature", real(&PipelineConfig::temperature)},
        {"mining.shot_selection",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             if (v == "first") {
                 c.shot_selection = sentence_mining::ShotStrategy::first;
             } else if (v == "similarity") {
                 c.shot_selection = sentence_mining::ShotStrategy::similarity;
             } else {
                 throw ConfigError(f + ": expected first or similarity, got '" + v + "'");
             }
         }},
        {"mining.best_example_last",
         [](PipelineConfig& c, const std::string& f, const std::string& v) { c.best_example_last = parse_bool(f, v); }},
        {"mining.bm25_k1", [](PipelineConfig& c, const std::string& f, const std::string& v) { c.bm25.k1 = parse_real(f, v); }},
        {"mining.bm25_b", [](PipelineConfig& c, const std::string& f, const std::string& v) { c.bm25.b = parse_real(f, v); }},

        {"decoding.sentence",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             if (v == "greedy") {
                 c.sentence_decoding = SentenceDecoding::greedy;
             } else if (v == "beam") {
                 c.sentence_decoding = SentenceDecoding::beam;
             } else {
                 throw ConfigError(f + ": expected greedy or beam, got '" + v + "'");
             }
         }},
        {"decoding.beam_width", integer(&PipelineConfig::beam_width)},
        {"decoding.word_max_tokens", integer(&PipelineConfig::word_max_tokens)},
        {"decoding.sentence_max_tokens", integer(&PipelineConfig::sentence_max_tokens)},

        {"prompts.word_zero_shot", prompt(&prompts::PromptTemplates::word_zero_shot)},
        {"prompts.word_header", prompt(&prompts::PromptTemplates::word_header)},
        {"prompts.sentence_header", prompt(&prompts::PromptTemplates::sentence_header)},
        {"prompts.example", prompt(&prompts::PromptTemplates::example)},
        {"prompts.query", prompt(&prompts::PromptTemplates::query)},

        {"metrics.chrf_char_order",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.metrics.chrf.char_ngram_max = parse_number<int>(f, v);
         }},
        {"metrics.chrf_word_order",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.metrics.chrf.word_ngram_max = parse_number<int>(f, v);
         }},
        {"metrics.chrf_beta",
         [](PipelineConfig& c, const std::string& f, const std::string& v) { c.metrics.chrf.beta = parse_real(f, v); }},
        {"metrics.bleu_max_ngram",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             c.metrics.bleu.max_ngram = parse_number<int>(f, v);
         }},
        {"metrics.bleu_smoothing",
         [](PipelineConfig& c, const std::string&, const std::string& v) {
             c.metrics.bleu.smoothing = metrics::smoothing_from_string(v);
         }},
        {"metrics.bleu_tokenizer",
         [](PipelineConfig& c, const std::string& f, const std::string& v) {
             if (v == "whitespace") {
                 c.metrics.bleu.tokenizer = metrics::TokenizerKind::whitespace;
             } else if (v == "char") {
                 c.metrics.bleu.tokenizer = metrics::TokenizerKind::character;
             } else if (v == "subword") {
                 c.metrics.bleu.tokenizer = metrics::TokenizerKind::subword;
             } else {
                 throw ConfigError(f + ": expected whitespace, char or subword, got '" + v + "'");
             }
         }},
        {"metrics.subword_vocab",
         [base_dir](PipelineConfig& c, const std::string&, const std::string& v) {
             c.metrics.bleu.subword_vocab = v.empty() ? std::filesystem::path{} : (base_dir / v).lexically_normal();
         }},

        {"run.output_dir", path(&PipelineConfig::output_dir)},
        {"run.seed",
         [](PipelineConfig& c, const std::string& f, const std::string& v) { c.seed = parse_number<std::int64_t>(f, v); }},
        {"run.policies",
         [&policies_set](PipelineConfig& c, const std::string&, const std::string& v) {
             c.policies.clear();
             for (const auto& item : split_list(v)) {
                 c.policies.push_back(policy_from_string(item));
             }
             policies_set = true;
         }},
    };
}

}  // namespace

PipelineConfig parse(std::string_view ini, const std::filesystem::path& base_dir)
{
    boost::property_tree::ptree tree;
    std::istringstream in{std::string(ini)};
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }

    PipelineConfig config;
    config.base_dir = base_dir;
    config.output_dir = (base_dir / config.output_dir).lexically_normal();
    bool policies_set = false;
    const auto table = setters(base_dir, policies_set);
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& [section, keys] : tree) {
        if (keys.empty()) {
            throw ConfigError("config: '" + section + "' must be inside a section");
        }
        for (const auto& [key, value] : keys) {
            entries.emplace_back(section + "." + key, text::trim(value.data()));
        }
    }
    for (const auto& [field, value] : entries) {
        auto it = table.find(field);
        if (it == table.end()) {
            throw ConfigError("config: unknown key '" + field + "'");
        }
        it->second(config, field, value);
    }
    if (!policies_set && !config.gold_source.empty() && !config.gold_target.empty()) {
        config.policies.push_back(Policy::gold_kshot);
        config.policies.push_back(Policy::gold_bm25);
    }
    return config;
}

PipelineConfig load(const std::filesystem::path& path)
{
    std::string content;
    try {
        content = io::read_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse(content, std::filesystem::absolute(path).parent_path());
}

namespace {

void require_file(const std::filesystem::path& path, const std::string& field, bool required = true)
{
    if (path.empty()) {
        if (required) {
            throw ConfigError(field + ": not set");
        }
        return;
    }
    if (!std::filesystem::is_regular_file(path)) {
        throw ConfigError(field + ": file not found: " + path.string());
    }
}

void require_at_least(int value, int minimum, const std::string& field)
{
    if (value < minimum) {
        throw ConfigError(fmt::format("{}: must be at least {} (got {})", field, minimum, value));
    }
}

}  // namespace

void validate(const PipelineConfig& c)
{
    if (c.source_lang.empty()) {
        throw ConfigError("languages.source: not set");
    }
    if (c.target_lang.empty()) {
        throw ConfigError("languages.target: not set");
    }
    if (c.source_lang == c.target_lang) {
        throw ConfigError("languages.target: must differ from languages.source");
    }
    require_file(c.source_vocab, "data.source_vocab");
    require_file(c.target_vocab, "data.target_vocab");
    require_file(c.unlabeled, "data.unlabeled");
    require_file(c.test_source, "data.test_source");
    require_file(c.test_target, "data.test_target");
    require_file(c.w2w_source, "data.w2w_source", false);
    require_file(c.gold_source, "data.gold_source", false);
    require_file(c.gold_target, "data.gold_target", false);
    if (c.gold_source.empty() != c.gold_target.empty()) {
        throw ConfigError("data.gold_source: gold_source and gold_target must be set together");
    }
    if (c.vocab_size < 1) {
        throw ConfigError("data.vocab_size: must be at least 1");
    }

    require_at_least(c.backend.concurrency, 1, "backend.concurrency");
    require_at_least(c.backend.max_attempts, 1, "backend.max_attempts");
    require_at_least(c.backend.timeout_seconds, 1, "backend.timeout_seconds");
    if (c.backend.kind == BackendKind::mock) {
        require_file(c.backend.mock_fixture, "backend.mock_fixture");
        require_file(c.backend.embedding_fixture, "backend.embedding_fixture", false);
        require_at_least(c.backend.embedding_dim, 1, "backend.embedding_dim");
    } else {
        if (c.backend.base_url.empty()) {
            throw ConfigError("backend.base_url: not set");
        }
        if (c.backend.model.empty()) {
            throw ConfigError("backend.model: not set");
        }
        if (c.backend.embedding_model.empty()) {
            throw ConfigError("backend.embedding_model: not set");
        }
    }

    require_at_least(c.n, 1, "mining.n");
    require_at_least(c.k_wp, 1, "mining.k_wp");
    require_at_least(c.k, 1, "mining.k");
    require_at_least(c.fallback_m, c.k, "mining.fallback_m");
    require_at_least(c.iterations, 1, "mining.iterations");
    if (!(c.tau >= 0.0 && c.tau <= 1.0)) {
        throw ConfigError(fmt::format("mining.tau: must lie in [0, 1] (got {})", c.tau));
    }
    if (!(c.temperature > 0.0)) {
        throw ConfigError(fmt::format("mining.temperature: must be positive (got {})", c.temperature));
    }
    try {
        bm25::validate(c.bm25);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("mining.") + e.what());
    }

    require_at_least(c.beam_width, 1, "decoding.beam_width");
    require_at_least(c.word_max_tokens, 1, "decoding.word_max_tokens");
    require_at_least(c.sentence_max_tokens, 1, "decoding.sentence_max_tokens");

    try {
        prompts::validate(c.templates);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("prompts: ") + e.what());
    }
    try {
        metrics::validate(c.metrics.chrf);
        metrics::validate(c.metrics.bleu);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("metrics: ") + e.what());
    }
    if (c.metrics.bleu.tokenizer == metrics::TokenizerKind::subword) {
        require_file(c.metrics.bleu.subword_vocab, "metrics.subword_vocab");
    }

    if (c.policies.empty()) {
        throw ConfigError("run.policies: at least one policy is required");
    }
    for (auto p : c.policies) {
        if (!policy_available(c, p)) {
            throw ConfigError("run.policies: " + to_string(p) + " needs data.gold_source and data.gold_target");
        }
    }
}

nlohmann::json constants_json(const PipelineConfig& c)
{
    nlohmann::json decoding = {
        {"sentence", backends::mode_name(sentence_mode(c))},
        {"word_max_tokens", c.word_max_tokens},
        {"sentence_max_tokens", c.sentence_max_tokens},
    };
    if (c.sentence_decoding == SentenceDecoding::beam) {
        decoding["beam_width"] = c.beam_width;
    }
    const char* tokenizer = c.metrics.bleu.tokenizer == metrics::TokenizerKind::whitespace ? "whitespace"
                            : c.metrics.bleu.tokenizer == metrics::TokenizerKind::character ? "char"
                                                                                            : "subword";
    return {
        {"languages", {{"source", c.source_lang}, {"target", c.target_lang}}},
        {"vocab_size", c.vocab_size},
        {"mining",
         {
             {"n", c.n},
             {"k_wp", c.k_wp},
             {"k", c.k},
             {"tau", c.tau},
             {"fallback_m", c.fallback_m},
             {"iterations", c.iterations},
             {"temperature", c.temperature},
             {"shot_selection", c.shot_selection == sentence_mining::ShotStrategy::first ? "first" : "similarity"},
             {"best_example_last", c.best_example_last},
             {"bm25_k1", c.bm25.k1},
             {"bm25_b", c.bm25.b},
         }},
        {"decoding", decoding},
        {"prompts",
         {
             {"word_zero_shot", c.templates.word_zero_shot},
             {"word_header", c.templates.word_header},
             {"sentence_header", c.templates.sentence_header},
             {"example", c.templates.example},
             {"query", c.templates.query},
         }},
        {"metrics",
         {
             {"chrf_char_order", c.metrics.chrf.char_ngram_max},
             {"chrf_word_order", c.metrics.chrf.word_ngram_max},
             {"chrf_beta", c.metrics.chrf.beta},
             {"bleu_max_ngram", c.metrics.bleu.max_ngram},
             {"bleu_smoothing", metrics::to_string(c.metrics.bleu.smoothing)},
             {"bleu_tokenizer", tokenizer},
         }},
        {"seed", c.seed},
    };
}

backends::DecodingMode sentence_mode(const PipelineConfig& config)
{
    if (config.sentence_decoding == SentenceDecoding::beam) {
        return backends::Beam{config.beam_width};
    }
    return backends::Greedy{};
}

bool policy_available(const PipelineConfig& config, Policy policy)
{
    if (policy == Policy::gold_kshot || policy == Policy::gold_bm25) {
        return !config.gold_source.empty() && !config.gold_target.empty();
    }
    return true;
}

}  // namespace iclmine::config
