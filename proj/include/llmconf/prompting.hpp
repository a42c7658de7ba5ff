#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "llmconf/case_store.hpp"

namespace llmconf {

struct PromptTemplate {
  enum class Name { kCotDiagnosis, kIntrinsicConfidence };

  Name name = Name::kCotDiagnosis;
  // Text with `{case_text}`, `{diagnosis}` and `{few_shot}` placeholders.
  std::string body;
  // Worked example substituted for `{few_shot}`; may be empty.
  std::string few_shot;
};

PromptTemplate default_cot_template();
PromptTemplate default_confidence_template();

// Reads a template body from a UTF-8 file. The few-shot block of the
// matching default template is kept.
PromptTemplate load_template(const std::filesystem::path& path, PromptTemplate::Name name);

// Single-pass substitution of `{name}` placeholders (lowercase letters and
// underscores). Substituted text is never rescanned. Throws RenderError for a
// placeholder with no binding.
std::string render_template(std::string_view body,
                            const std::map<std::string, std::string>& bindings);

std::string render_cot_prompt(const ClinicalCase& c, const PromptTemplate& tmpl);
std::string render_intrinsic_prompt(const std::string& diagnosis, const ClinicalCase& c,
                                    const PromptTemplate& tmpl = default_confidence_template());

// Text following the last line that starts with "Diagnosis:" (any case).
// When the marker line is otherwise empty the next non-blank line is used.
// Surrounding whitespace and trailing sentence punctuation are removed.
std::string parse_diagnosis(std::string_view response_text);

enum class RangePolicy { kFirstNumber, kMidpoint };

// First numeric token (integer or decimal, optional %) scaled to [0,1].
double parse_confidence(std::string_view response_text,
                        RangePolicy policy = RangePolicy::kFirstNumber);

}  // namespace llmconf
