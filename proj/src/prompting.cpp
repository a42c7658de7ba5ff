#include "llmconf/prompting.hpp"

#include <cctype>
#include <charconv>
#include <regex>
#include <vector>

#include "llmconf/errors.hpp"
#include "llmconf/io.hpp"

namespace llmconf {

namespace {

constexpr std::string_view kCotBody =
    "Read the initial presentation of a medical case below and determine the final "
    "diagnosis. Assume that all of the relevant details from figures and tables have been "
    "explained in the text. When providing your rationale, USE STEP-BY-STEP DEDUCTION TO "
    "IDENTIFY THE CORRECT RESPONSE. After you provide your rationale, provide a single, "
    "specific diagnosis for the case in less than 10 words.\n"
    "\n"
    "{few_shot}"
    "Case:\n"
    "\n"
    "{case_text}\n"
    "\n"
    "Rationale(REMEMBER TO USE STEP BY STEP DEDUCTION):\n"
    "\n"
    "Diagnosis:";

// Synthetic worked example; stands in for a licensed case record.
constexpr std::string_view kCotFewShot =
    "Example Case:\n"
    "\n"
    "A 31-year-old man presents with six weeks of painful oral ulcers, recurrent genital "
    "ulcers, and tender red nodules on both shins. He has had intermittent fevers and "
    "symmetric knee and ankle pain. Cultures and viral studies are negative and two courses "
    "of antibiotics did not help. A pustule formed at the site of a recent blood draw.\n"
    "\n"
    "Rationale(REMEMBER TO USE STEP BY STEP DEDUCTION):\n"
    "\n"
    "Recurrent oral ulcers can be seen with autoimmune and infectious disease. The negative "
    "infectious work-up and lack of response to antibiotics favor an autoimmune process. "
    "Genital ulcers together with oral ulcers suggest Behcet disease. Erythema "
    "nodosum-like lesions and symmetric arthralgias are common in Behcet disease. A pustule "
    "at a needle-stick site is the pathergy phenomenon, a specific sign of Behcet disease.\n"
    "\n"
    "Diagnosis:\n"
    "\n"
    "Behcet disease is the most likely diagnosis.\n"
    "\n"
    "===\n"
    "\n";

constexpr std::string_view kConfidenceBody =
    "Describe what percent chance (from 0 to 100) you think the following diagnosis is the "
    "answer for the provided patient scenario provided below.\n"
    "\n"
    "Answer: {diagnosis}\n"
    "\n"
    "Case Scenario: {case_text}";

double to_double(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

bool is_placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || c == '_';
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// If `line` opens with a Diagnosis marker, returns the text after the colon.
std::optional<std::string_view> after_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '*' ||
                             line[i] == '#')) {
    ++i;
  }
  constexpr std::string_view kWord = "diagnosis";
  if (line.size() - i < kWord.size() || lower_ascii(line.substr(i, kWord.size())) != kWord) {
    return std::nullopt;
  }
  i += kWord.size();
  while (i < line.size() && line[i] == '*') ++i;
  if (i >= line.size() || line[i] != ':') return std::nullopt;
  ++i;
  while (i < line.size() && line[i] == '*') ++i;
  return line.substr(i);
}

}  // namespace

PromptTemplate default_cot_template() {
  return {PromptTemplate::Name::kCotDiagnosis, std::string(kCotBody), std::string(kCotFewShot)};
}

PromptTemplate default_confidence_template() {
  return {PromptTemplate::Name::kIntrinsicConfidence, std::string(kConfidenceBody), {}};
}

PromptTemplate load_template(const std::filesystem::path& path, PromptTemplate::Name name) {
  PromptTemplate t = name == PromptTemplate::Name::kCotDiagnosis
                         ? default_cot_template()
                         : default_confidence_template();
  t.body = io::read_file(path);
  return t;
}

std::string render_template(std::string_view body,
                            const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_placeholder_char(body[j])) ++j;
      if (j < body.size() && body[j] == '}' && j > i + 1) {
        const std::string name(body.substr(i + 1, j - i - 1));
        auto it = bindings.find(name);
        if (it == bindings.end()) throw RenderError("unbound placeholder {" + name + "}");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(body[i++]);
  }
  return out;
}

std::string render_cot_prompt(const ClinicalCase& c, const PromptTemplate& tmpl) {
  if (tmpl.name != PromptTemplate::Name::kCotDiagnosis) {
    throw ArgumentError("render_cot_prompt needs a cot_diagnosis template");
  }
  const auto slot = tmpl.body.find("{case_text}");
  if (slot == std::string::npos) throw RenderError("template is missing {case_text}");
  if (tmpl.body.find("Diagnosis:", slot) == std::string::npos) {
    throw RenderError("template has no Diagnosis: scaffold after {case_text}");
  }
  return render_template(tmpl.body, {{"case_text", c.case_text}, {"few_shot", tmpl.few_shot}});
}

std::string render_intrinsic_prompt(const std::string& diagnosis, const ClinicalCase& c,
                                    const PromptTemplate& tmpl) {
  if (trim(diagnosis).empty()) throw ArgumentError("diagnosis must be non-empty");
  if (tmpl.name != PromptTemplate::Name::kIntrinsicConfidence) {
    throw ArgumentError("render_intrinsic_prompt needs an intrinsic_confidence template");
  }
  if (tmpl.body.find("{diagnosis}") == std::string::npos) {
    throw RenderError("template is missing {diagnosis}");
  }
  if (tmpl.body.find("{case_text}") == std::string::npos) {
    throw RenderError("template is missing {case_text}");
  }
  return render_template(tmpl.body, {{"diagnosis", diagnosis}, {"case_text", c.case_text}});
}

std::string parse_diagnosis(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }

  std::optional<std::size_t> marker;
  std::string_view rest;
  for (std::size_t i = lines.size(); i-- > 0;) {
    if (auto tail = after_marker(lines[i])) {
      marker = i;
      rest = *tail;
      break;
    }
  }
  if (!marker) throw ExtractionError("no 'Diagnosis:' line in response");

  std::string_view answer = trim(rest);
  for (std::size_t i = *marker + 1; answer.empty() && i < lines.size(); ++i) {
    answer = trim(lines[i]);
  }
  while (!answer.empty() &&
         (answer.back() == '.' || answer.back() == '*' || answer.back() == ' ')) {
    answer.remove_suffix(1);
  }
  answer = trim(answer);
  if (answer.empty()) throw ExtractionError("empty text after 'Diagnosis:'");
  return std::string(answer);
}

double parse_confidence(std::string_view text, RangePolicy policy) {
  static const std::regex kNumber(R"((\d+(?:\.\d+)?)\s*%?)");
  static const std::regex kRangeTail(R"(^\s*(?:-|–|to)\s*(\d+(?:\.\d+)?))");
  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, kNumber)) {
    throw ExtractionError("no numeric confidence in response");
  }
  double value = to_double(m[1].str());
  if (policy == RangePolicy::kMidpoint) {
    std::smatch r;
    const std::string tail = m.suffix().str();
    if (std::regex_search(tail, r, kRangeTail)) {
      const double hi = to_double(r[1].str());
      if (hi >= 0.0 && hi <= 100.0) value = 0.5 * (value + hi);
    }
  }
  if (value < 0.0 || value > 100.0) {
    throw OutOfRangeError("confidence " + m[1].str() + " is outside [0, 100]");
  }
  return value / 100.0;
}

}  // namespace llmconf
