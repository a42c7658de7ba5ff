#pragma once

// The sample / score / report commands as library calls.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llmconf/case_store.hpp"
#include "llmconf/grouping.hpp"
#include "llmconf/model_gateway.hpp"
#include "llmconf/prompting.hpp"
#include "llmconf/report.hpp"
#include "llmconf/sc_engine.hpp"

namespace llmconf {

struct SampleResult {
  int cases_completed = 0;  // cases that got new records this call
  int cases_skipped = 0;    // already complete in the ledger
  std::size_t records_appended = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Records for one case that are not yet in `existing`: self-consistency runs
// in index order, then the intrinsic elicitation on the modal answer.
std::vector<RunRecord> sample_case(const ClinicalCase& c, const SamplingConfig& cfg,
                                   Provider& provider, const GroupingMap& map,
                                   const PromptTemplate& cot, const PromptTemplate& confidence,
                                   const RunLedger& existing);

// Self-consistency plus intrinsic elicitation for every case, appended to the
// ledger at `ledger_path`. Records already in the ledger are not requested
// again, so rerunning after an interruption completes the same ledger.
// A case whose runs all fail stops the command; nothing is written for it.
SampleResult cmd_sample(const std::vector<ClinicalCase>& cases, const std::string& corpus_sha256,
                        const std::filesystem::path& ledger_path, const SamplingConfig& cfg,
                        Provider& provider, const GroupingMap& map,
                        const PromptTemplate& cot = default_cot_template(),
                        const PromptTemplate& confidence = default_confidence_template());

struct ScoreResult {
  std::vector<CaseScores> scores;
  std::vector<std::string> warnings;
};

// Scores every case in the ledger by replaying it. When `cases` is given,
// rows follow corpus order and case text is available to the prompts.
ScoreResult cmd_score(const RunLedger& ledger, const GroupingMap& map, const SamplingConfig& cfg,
                      const std::vector<ClinicalCase>* cases = nullptr);

struct GradingInput {
  const GradeFile* grades = nullptr;               // human grades, or
  const std::vector<ClinicalCase>* cases = nullptr;  // reference answers for auto-grading
  const GroupingMap* map = nullptr;
};

// Attaches grades (cases without one are excluded and counted) and builds
// the evaluation report.
EvaluationReport cmd_report(std::vector<CaseScores> scores, const GradingInput& grading,
                            ReportConfig config);

// cmd_score + serialize to `<out>/scores.csv`.
void write_scores(const std::filesystem::path& path, const std::vector<CaseScores>& scores);

}  // namespace llmconf
