#pragma once

#include "iclmine/corpus.hpp"

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iclmine::prompts {

/// Prompt layouts. Placeholders: {src}, {tgt} (language display names),
/// {word}, {source}, {target}. "{{" and "}}" produce literal braces.
struct PromptTemplates {
    std::string word_zero_shot = "The {src} word \"{word}\" in {tgt} is:";
    std::string word_header = "Translate the following {src} word to {tgt}:";
    std::string sentence_header = "Translate the following {src} sentence to {tgt}:";
    std::string example = "{src}: {source}\n{tgt}: {target}";
    std::string query = "{src}: {source}\n{tgt}:";
};

/// Throws ConfigError on an unknown placeholder or an unbalanced brace.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Check every template renders with the placeholders it will receive.
void validate(const PromptTemplates& templates);

using Example = std::pair<std::string, std::string>;

std::string word_zero_shot(const PromptTemplates& t,
                           const corpus::LanguageSpec& src,
                           const corpus::LanguageSpec& tgt,
                           std::string_view word);

/// Header line, one block per example, then the query with a trailing target cue.
std::string word_kshot(const PromptTemplates& t,
                       const corpus::LanguageSpec& src,
                       const corpus::LanguageSpec& tgt,
                       const std::vector<Example>& examples,
                       std::string_view word);

/// Same layout with the sentence header. An empty example list gives the zero-shot prompt.
std::string sentence_kshot(const PromptTemplates& t,
                           const corpus::LanguageSpec& src,
                           const corpus::LanguageSpec& tgt,
                           const std::vector<Example>& examples,
                           std::string_view sentence);

}  // namespace iclmine::prompts
