#include "iclmine/prompts.hpp"

#include "iclmine/errors.hpp"

namespace iclmine::prompts {

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values)
{
    std::string out;
    out.reserve(tmpl.size() + 64);
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        const char c = tmpl[i];
        if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            out.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            out.push_back('}');
            ++i;
        } else if (c == '{') {
            const auto close = tmpl.find('}', i);
            if (close == std::string_view::npos) {
                throw ConfigError("unbalanced '{' in prompt template: " + std::string(tmpl));
            }
            const std::string name(tmpl.substr(i + 1, close - i - 1));
            auto it = values.find(name);
            if (it == values.end()) {
                throw ConfigError("unknown placeholder {" + name + "} in prompt template: " + std::string(tmpl));
            }
            out += it->second;
            i = close;
        } else if (c == '}') {
            throw ConfigError("unbalanced '}' in prompt template: " + std::string(tmpl));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

void validate(const PromptTemplates& t)
{
    render(t.word_zero_shot, {{"src", "A"}, {"tgt", "B"}, {"word", "w"}});
    render(t.word_header, {{"src", "A"}, {"tgt", "B"}});
    render(t.sentence_header, {{"src", "A"}, {"tgt", "B"}});
    render(t.example, {{"src", "A"}, {"tgt", "B"}, {"source", "s"}, {"target", "t"}});
    render(t.query, {{"src", "A"}, {"tgt", "B"}, {"source", "s"}});
}

std::string word_zero_shot(const PromptTemplates& t,
                           const corpus::LanguageSpec& src,
                           const corpus::LanguageSpec& tgt,
                           std::string_view word)
{
    return render(t.word_zero_shot, {{"src", src.display_name()}, {"tgt", tgt.display_name()}, {"word", std::string(word)}});
}

namespace {

std::string kshot(std::string_view header,
                  const PromptTemplates& t,
                  const corpus::LanguageSpec& src,
                  const corpus::LanguageSpec& tgt,
                  const std::vector<Example>& examples,
                  std::string_view query)
{
    const std::string s = src.display_name();
    const std::string g = tgt.display_name();
    std::string out = render(header, {{"src", s}, {"tgt", g}});
    for (const auto& [source, target] : examples) {
        out += '\n';
        out += render(t.example, {{"src", s}, {"tgt", g}, {"source", source}, {"target", target}});
    }
    out += '\n';
    out += render(t.query, {{"src", s}, {"tgt", g}, {"source", std::string(query)}});
    return out;
}

}  // namespace

std::string word_kshot(const PromptTemplates& t,
                       const corpus::LanguageSpec& src,
                       const corpus::LanguageSpec& tgt,
                       const std::vector<Example>& examples,
                       std::string_view word)
{
    return kshot(t.word_header, t, src, tgt, examples, word);
}

std::string sentence_kshot(const PromptTemplates& t,
                           const corpus::LanguageSpec& src,
                           const corpus::LanguageSpec& tgt,
                           const std::vector<Example>& examples,
                           std::string_view sentence)
{
    return kshot(t.sentence_header, t, src, tgt, examples, sentence);
}

}  // namespace iclmine::prompts
