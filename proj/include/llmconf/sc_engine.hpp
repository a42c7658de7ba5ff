#pragma once

// Self-consistency sampling and the three per-case confidence signals.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmconf/case_store.hpp"
#include "llmconf/grouping.hpp"
#include "llmconf/model_gateway.hpp"
#include "llmconf/prompting.hpp"

namespace llmconf {

struct SamplingConfig {
  int runs_per_case = 11;
  double sc_temperature = 1.0;
  double intrinsic_temperature = 0.0;
  int max_output_tokens = 4096;
  std::string model_id;
  // Elicit confidence for every run's own diagnosis and average, instead of
  // once on the modal diagnosis.
  bool intrinsic_per_run = false;

  void validate() const;
  SamplingParams sc_params() const;
  SamplingParams intrinsic_params() const;
};

enum class Correctness { kUngraded, kCorrect, kIncorrect };
std::string to_string(Correctness c);
Correctness correctness_from_string(const std::string& s);

struct CaseScores {
  std::string case_id;
  std::string modal_answer;
  double sc_agreement_frequency = 0.0;
  int modal_count = 0;
  int usable_runs = 0;
  std::optional<double> intrinsic_confidence;
  double mean_cot_length = 0.0;
  Correctness correct = Correctness::kUngraded;

  bool operator==(const CaseScores&) const = default;
};

// Issues `cfg.runs_per_case` chain-of-thought samples concurrently and returns
// one record per run_index, in index order. Runs already present in
// `existing` are reused rather than re-issued. A provider error or an
// unparseable diagnosis yields a failed record; if every run fails the case
// is reported with CaseFailedError.
std::vector<RunRecord> run_self_consistency(const ClinicalCase& c, const SamplingConfig& cfg,
                                            Provider& provider, const PromptTemplate& tmpl,
                                            const RunLedger* existing = nullptr);

struct ModalAnswer {
  std::string label;
  double frequency = 0.0;
  int count = 0;
};

// Largest group over the usable runs; ties go to the lexicographically
// smallest label.
ModalAnswer agreement_frequency(const GroupAssignment& assignment);

struct IntrinsicOutcome {
  std::optional<double> confidence;
  std::vector<RunRecord> records;  // every intrinsic call made or replayed
};

// One Prompt-1 style elicitation for `diagnosis`, with a single re-ask when
// the first reply has no usable percentage. Intrinsic keys use run_index
// `2 * slot` and `2 * slot + 1` for the re-ask.
IntrinsicOutcome elicit_intrinsic_confidence(const ClinicalCase& c, const std::string& diagnosis,
                                             const SamplingConfig& cfg, Provider& provider,
                                             const PromptTemplate& tmpl, int slot = 0,
                                             const RunLedger* existing = nullptr);

double mean_response_length(std::span<const RunRecord> runs);

struct ScoredCase {
  CaseScores scores;
  GroupAssignment assignment;
  std::vector<RunRecord> intrinsic_records;
};

// Grouping, modal answer and frequency, intrinsic elicitation on the modal
// diagnosis (or per run), and mean length. Correctness stays ungraded.
ScoredCase score_case(const ClinicalCase& c, std::span<const RunRecord> runs,
                      const GroupingMap& map, const SamplingConfig& cfg, Provider& provider,
                      const PromptTemplate& confidence_tmpl = default_confidence_template(),
                      const RunLedger* existing = nullptr);

// Scores file: `case_id,modal_answer,sc_frequency,intrinsic_confidence,
// mean_cot_length,usable_runs,correct`. Reals use shortest round-trip form;
// an absent intrinsic score is an empty field.
std::string serialize_scores(std::span<const CaseScores> scores);
std::vector<CaseScores> parse_scores(const std::string& text);
std::vector<CaseScores> load_scores(const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace llmconf
