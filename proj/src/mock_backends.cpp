#include "iclmine/mock_backends.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/io.hpp"
#include "iclmine/text.hpp"

#include <cmath>

namespace iclmine::backends {

namespace {

std::string excerpt(std::string_view prompt)
{
    constexpr std::size_t limit = 120;
    std::string out(prompt.substr(0, limit));
    if (prompt.size() > limit) {
        out += "...";
    }
    return out;
}

}  // namespace

Fixtures load_fixtures(const std::filesystem::path& path)
{
    Fixtures fixtures;
    const auto lines = text::split_lines(io::read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) {
            continue;
        }
        const auto where = path.string() + ":" + std::to_string(i + 1);
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where + ": malformed fixture record: " + e.what());
        }
        try {
            if (record.contains("prompt")) {
                std::vector<ScoredCompletion> completions;
                for (const auto& c : record.at("completions")) {
                    completions.push_back({c.at("text").get<std::string>(), c.at("score").get<double>()});
                }
                fixtures.completions[record.at("prompt").get<std::string>()] = std::move(completions);
            } else if (record.contains("vector")) {
                fixtures.vectors[record.at("text").get<std::string>()] = record.at("vector").get<std::vector<double>>();
            } else {
                throw DataError(where + ": fixture record needs 'prompt' or 'vector'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return fixtures;
}

FixtureLanguageModel::FixtureLanguageModel(std::unordered_map<std::string, std::vector<ScoredCompletion>> table,
                                           std::string name)
    : table_(std::move(table)), name_(std::move(name))
{
}

std::vector<ScoredCompletion> FixtureLanguageModel::generate(const GenerationRequest& request)
{
    ++calls_;
    validate(request);
    auto it = table_.find(request.prompt);
    if (it == table_.end()) {
        throw BackendError("unfixtured prompt: " + excerpt(request.prompt));
    }
    return finalize_completions(it->second, request);
}

FixtureEmbeddingModel::FixtureEmbeddingModel(std::unordered_map<std::string, std::vector<double>> table,
                                             std::string name)
    : table_(std::move(table)), name_(std::move(name))
{
}

EmbeddingVector FixtureEmbeddingModel::embed(std::string_view text)
{
    ++calls_;
    if (text.empty()) {
        throw BackendError("cannot embed empty text");
    }
    auto it = table_.find(std::string(text));
    if (it == table_.end()) {
        throw BackendError("unfixtured embedding text: " + excerpt(text));
    }
    return EmbeddingVector(it->second);
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

TrigramEmbeddingModel::TrigramEmbeddingModel(std::size_t dim) : dim_(dim)
{
    if (dim_ == 0) {
        throw ConfigError("embedding dimension must be positive");
    }
}

EmbeddingVector TrigramEmbeddingModel::embed(std::string_view input)
{
    ++calls_;
    const auto normalized = text::normalize_word(text::normalize_spaces(input));
    if (normalized.empty()) {
        throw BackendError("cannot embed empty text");
    }
    const auto padded = text::to_u32(" " + normalized + " ");
    std::vector<double> counts(dim_, 0.0);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        const auto trigram = text::to_utf8(std::u32string_view(padded).substr(i, 3));
        counts[fnv1a64(trigram) % dim_] += 1.0;
    }
    double sum = 0.0;
    for (double c : counts) {
        sum += c * c;
    }
    const double norm = std::sqrt(sum);
    for (double& c : counts) {
        c /= norm;
    }
    return EmbeddingVector(std::move(counts));
}

std::vector<ScoredCompletion> RecordingLanguageModel::generate(const GenerationRequest& request)
{
    auto result = inner_.generate(request);
    std::lock_guard lock(mutex_);
    // One prompt may be issued both sampled (n > 1) and greedy; keep the
    // longest list so replay can serve both.
    auto& slot = recorded_[request.prompt];
    if (result.size() > slot.size()) {
        slot = result;
    }
    return result;
}

std::string RecordingLanguageModel::to_jsonl() const
{
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& [prompt, completions] : recorded_) {
        nlohmann::json record;
        record["prompt"] = prompt;
        record["completions"] = nlohmann::json::array();
        for (const auto& c : completions) {
            record["completions"].push_back({{"text", c.text}, {"score", c.sequence_score}});
        }
        out += record.dump();
        out += '\n';
    }
    return out;
}

}  // namespace iclmine::backends
