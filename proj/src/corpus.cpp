#include "iclmine/corpus.hpp"

#include "iclmine/errors.hpp"
#include "iclmine/io.hpp"
#include "iclmine/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>

namespace iclmine::corpus {

LanguageSpec::LanguageSpec(std::string code, std::string display_name)
    : code_(std::move(code)), display_name_(std::move(display_name))
{
    const auto underscore = code_.find('_');
    if (code_.empty() || underscore == std::string::npos || underscore == 0 ||
        underscore + 1 == code_.size() || code_.find('_', underscore + 1) != std::string::npos) {
        throw ConfigError("invalid language code '" + code_ + "': expected <language>_<Script>");
    }
    if (display_name_.empty()) {
        throw ConfigError("language '" + code_ + "' has an empty display name");
    }
}

namespace {

struct NamedCode {
    std::string_view code;
    std::string_view name;
};

// FLORES-200 codes commonly used in evaluation.
constexpr NamedCode kFloresNames[] = {
    {"afr_Latn", "Afrikaans"},   {"amh_Ethi", "Amharic"},       {"arb_Arab", "Arabic"},
    {"asm_Beng", "Assamese"},    {"azj_Latn", "Azerbaijani"},   {"bel_Cyrl", "Belarusian"},
    {"ben_Beng", "Bengali"},     {"bos_Latn", "Bosnian"},       {"bul_Cyrl", "Bulgarian"},
    {"cat_Latn", "Catalan"},     {"ces_Latn", "Czech"},         {"ckb_Arab", "Central Kurdish"},
    {"cym_Latn", "Welsh"},       {"dan_Latn", "Danish"},        {"deu_Latn", "German"},
    {"ell_Grek", "Greek"},       {"eng_Latn", "English"},       {"est_Latn", "Estonian"},
    {"eus_Latn", "Basque"},      {"fin_Latn", "Finnish"},       {"fra_Latn", "French"},
    {"gle_Latn", "Irish"},       {"glg_Latn", "Galician"},      {"guj_Gujr", "Gujarati"},
    {"hau_Latn", "Hausa"},       {"heb_Hebr", "Hebrew"},        {"hin_Deva", "Hindi"},
    {"hrv_Latn", "Croatian"},    {"hun_Latn", "Hungarian"},     {"hye_Armn", "Armenian"},
    {"ibo_Latn", "Igbo"},        {"ind_Latn", "Indonesian"},    {"isl_Latn", "Icelandic"},
    {"ita_Latn", "Italian"},     {"jpn_Jpan", "Japanese"},      {"kat_Geor", "Georgian"},
    {"kaz_Cyrl", "Kazakh"},      {"khm_Khmr", "Khmer"},         {"kor_Hang", "Korean"},
    {"lao_Laoo", "Lao"},         {"lit_Latn", "Lithuanian"},    {"ltz_Latn", "Luxembourgish"},
    {"lvs_Latn", "Latvian"},     {"mal_Mlym", "Malayalam"},     {"mar_Deva", "Marathi"},
    {"mkd_Cyrl", "Macedonian"},  {"mya_Mymr", "Burmese"},       {"nld_Latn", "Dutch"},
    {"nob_Latn", "Norwegian"},   {"npi_Deva", "Nepali"},        {"nso_Latn", "Northern Sotho"},
    {"pan_Guru", "Punjabi"},     {"pes_Arab", "Persian"},       {"pol_Latn", "Polish"},
    {"por_Latn", "Portuguese"},  {"ron_Latn", "Romanian"},      {"rus_Cyrl", "Russian"},
    {"sin_Sinh", "Sinhala"},     {"slk_Latn", "Slovak"},        {"slv_Latn", "Slovenian"},
    {"som_Latn", "Somali"},      {"spa_Latn", "Spanish"},       {"srp_Cyrl", "Serbian"},
    {"swe_Latn", "Swedish"},     {"swh_Latn", "Swahili"},       {"tam_Taml", "Tamil"},
    {"tel_Telu", "Telugu"},      {"tha_Thai", "Thai"},          {"tur_Latn", "Turkish"},
    {"ukr_Cyrl", "Ukrainian"},   {"urd_Arab", "Urdu"},          {"vie_Latn", "Vietnamese"},
};

void warn_rejected(const std::filesystem::path& path, std::size_t line_no, std::string_view reason)
{
    spdlog::warn("{}:{}: {}", path.string(), line_no, reason);
}

std::vector<std::string> read_lines(const std::filesystem::path& path)
{
    auto content = io::read_file(path);
    return text::split_lines(content);
}

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

std::optional<std::string> builtin_display_name(std::string_view code)
{
    for (const auto& entry : kFloresNames) {
        if (entry.code == code) {
            return std::string(entry.name);
        }
    }
    return std::nullopt;
}

LanguageSpec make_language(const std::string& code, const std::optional<std::string>& name_override)
{
    if (name_override && !name_override->empty()) {
        return LanguageSpec(code, *name_override);
    }
    auto name = builtin_display_name(code);
    if (!name) {
        throw ConfigError("no display name known for language '" + code + "'; set one in the config");
    }
    return LanguageSpec(code, *name);
}

Vocabulary::Vocabulary(LanguageSpec language, std::vector<std::string> words, std::string source_path)
    : language_(std::move(language)), source_path_(std::move(source_path))
{
    words_.reserve(words.size());
    for (auto& word : words) {
        auto normalized = text::normalize_word(word);
        if (normalized.empty() || text::has_whitespace(normalized)) {
            throw DataError("invalid vocabulary entry '" + word + "'");
        }
        if (index_.emplace(normalized, words_.size()).second) {
            words_.push_back(std::move(normalized));
        }
    }
}

bool Vocabulary::contains(std::string_view word) const
{
    return rank(word).has_value();
}

std::optional<std::size_t> Vocabulary::rank(std::string_view word) const
{
    auto it = index_.find(text::normalize_word(word));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::string> Vocabulary::canonical(std::string_view word) const
{
    auto r = rank(word);
    if (!r) {
        return std::nullopt;
    }
    return words_[*r];
}

Vocabulary Vocabulary::truncated(std::size_t max_size) const
{
    std::vector<std::string> words(words_.begin(), words_.begin() + static_cast<std::ptrdiff_t>(std::min(max_size, words_.size())));
    return Vocabulary(language_, std::move(words), source_path_);
}

std::vector<std::string> ParallelCorpus::sources() const
{
    std::vector<std::string> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        out.push_back(p.first);
    }
    return out;
}

std::vector<std::string> ParallelCorpus::targets() const
{
    std::vector<std::string> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        out.push_back(p.second);
    }
    return out;
}

Vocabulary load_vocabulary(const std::filesystem::path& path, const LanguageSpec& language, std::size_t max_size)
{
    if (max_size == 0) {
        throw ConfigError("vocabulary max_size must be positive");
    }
    const auto lines = read_lines(path);
    std::vector<std::string> words;
    std::unordered_map<std::string, bool> seen;
    bool any_token = false;
    for (std::size_t i = 0; i < lines.size() && words.size() < max_size; ++i) {
        auto token = text::trim(lines[i]);
        if (token.empty()) {
            continue;
        }
        any_token = true;
        if (text::has_whitespace(token)) {
            warn_rejected(path, i + 1, "vocabulary entry contains whitespace; skipped");
            continue;
        }
        auto normalized = text::normalize_word(token);
        if (seen.emplace(normalized, true).second) {
            words.push_back(std::move(normalized));
        }
    }
    if (!any_token || words.empty()) {
        throw DataError("empty vocabulary: " + path.string());
    }
    return Vocabulary(language, std::move(words), path.string());
}

MonolingualCorpus load_monolingual(const std::filesystem::path& path, const LanguageSpec& language)
{
    auto lines = read_lines(path);
    MonolingualCorpus corpus{language, {}};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto sentence = text::trim(lines[i]);
        if (sentence.empty()) {
            // A trailing newline is not a blank line.
            if (i + 1 != lines.size() || !lines[i].empty()) {
                warn_rejected(path, i + 1, "blank line dropped");
            }
            continue;
        }
        corpus.sentences.push_back(std::move(sentence));
    }
    if (corpus.sentences.empty()) {
        throw DataError("no usable sentences in " + path.string());
    }
    return corpus;
}

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path,
                             const LanguageSpec& source_lang,
                             const LanguageSpec& target_lang)
{
    auto strip_final_empty = [](std::vector<std::string> lines) {
        if (!lines.empty() && lines.back().empty()) {
            lines.pop_back();
        }
        return lines;
    };
    const auto src = strip_final_empty(read_lines(source_path));
    const auto tgt = strip_final_empty(read_lines(target_path));
    if (src.size() != tgt.size()) {
        throw DataError("alignment mismatch: " + source_path.string() + " has " + std::to_string(src.size()) +
                        " lines, " + target_path.string() + " has " + std::to_string(tgt.size()));
    }
    ParallelCorpus corpus{source_lang, target_lang, {}};
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        auto s = text::trim(src[i]);
        auto t = text::trim(tgt[i]);
        if (s.empty() || t.empty()) {
            warn_rejected(s.empty() ? source_path : target_path, i + 1, "blank line; pair dropped");
            ++dropped;
            continue;
        }
        corpus.pairs.emplace_back(std::move(s), std::move(t));
    }
    if (dropped > 0) {
        spdlog::warn("dropped {} of {} parallel pairs with a blank side", dropped, src.size());
    }
    if (corpus.pairs.empty()) {
        throw DataError("no usable sentence pairs in " + source_path.string());
    }
    return corpus;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines)
{
    io::write_file_atomic(path, join_lines(lines));
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab)
{
    write_lines(path, vocab.words());
}

void write_monolingual(const std::filesystem::path& path, const MonolingualCorpus& corpus)
{
    write_lines(path, corpus.sentences);
}

void write_parallel(const std::filesystem::path& source_path,
                    const std::filesystem::path& target_path,
                    const ParallelCorpus& corpus)
{
    write_lines(source_path, corpus.sources());
    write_lines(target_path, corpus.targets());
}

}  // namespace iclmine::corpus
