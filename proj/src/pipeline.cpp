#include "llmconf/pipeline.hpp"

#include <map>

#include "llmconf/analytics.hpp"
#include "llmconf/errors.hpp"
#include "llmconf/io.hpp"

namespace llmconf {

namespace {

std::vector<RunRecord> unseen(const RunLedger& ledger, const std::vector<RunRecord>& records) {
  std::vector<RunRecord> out;
  for (const auto& r : records) {
    if (!ledger.contains(r.key())) out.push_back(r);
  }
  return out;
}

}  // namespace

std::vector<RunRecord> sample_case(const ClinicalCase& c, const SamplingConfig& cfg,
                                   Provider& provider, const GroupingMap& map,
                                   const PromptTemplate& cot, const PromptTemplate& confidence,
                                   const RunLedger& existing) {
  const auto sc_runs = run_self_consistency(c, cfg, provider, cot, &existing);
  auto fresh = unseen(existing, sc_runs);
  try {
    ScoredCase scored = score_case(c, sc_runs, map, cfg, provider, confidence, &existing);
    auto intrinsic = unseen(existing, scored.intrinsic_records);
    fresh.insert(fresh.end(), intrinsic.begin(), intrinsic.end());
  } catch (const EmptyCaseError&) {
    // No groupable answer, so there is nothing to ask a confidence about.
  }
  return fresh;
}

SampleResult cmd_sample(const std::vector<ClinicalCase>& cases, const std::string& corpus_sha256,
                        const std::filesystem::path& ledger_path, const SamplingConfig& cfg,
                        Provider& provider, const GroupingMap& map, const PromptTemplate& cot,
                        const PromptTemplate& confidence) {
  cfg.validate();
  LedgerWriter writer(ledger_path,
                      LedgerHeader{corpus_sha256, cfg.runs_per_case, cfg.sc_temperature,
                                   cfg.model_id});
  SampleResult result;
  for (const auto& c : cases) {
    std::vector<RunRecord> fresh;
    try {
      fresh = sample_case(c, cfg, provider, map, cot, confidence, writer.ledger());
    } catch (const CaseFailedError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      return result;
    }
    writer.append(fresh);
    result.records_appended += fresh.size();
    (fresh.empty() ? result.cases_skipped : result.cases_completed)++;
  }
  return result;
}

ScoreResult cmd_score(const RunLedger& ledger, const GroupingMap& map, const SamplingConfig& cfg,
                      const std::vector<ClinicalCase>* cases) {
  auto shared = std::make_shared<const RunLedger>(ledger);
  ReplayProvider replay(shared);

  std::vector<ClinicalCase> order;
  if (cases != nullptr) {
    order = *cases;
  } else {
    for (const auto& id : ledger.case_ids()) order.push_back(ClinicalCase{id, "", "", ""});
  }

  ScoreResult out;
  for (const auto& c : order) {
    const auto runs = ledger.runs_for(c.case_id, Purpose::kSelfConsistency);
    if (runs.empty()) {
      out.warnings.push_back("case " + c.case_id + " has no runs in the ledger; skipped");
      continue;
    }
    try {
      auto scored = score_case(c, runs, map, cfg, replay, default_confidence_template(),
                               shared.get());
      if (!scored.scores.intrinsic_confidence) {
        out.warnings.push_back("case " + c.case_id + " has no usable intrinsic confidence");
      }
      out.scores.push_back(std::move(scored.scores));
    } catch (const EmptyCaseError& e) {
      out.warnings.push_back(std::string(e.what()) + "; skipped");
    }
  }
  return out;
}

EvaluationReport cmd_report(std::vector<CaseScores> scores, const GradingInput& grading,
                            ReportConfig config) {
  std::map<std::string, const ClinicalCase*> by_id;
  if (grading.grades == nullptr) {
    if (grading.cases == nullptr) {
      throw ArgumentError("report needs a grade file or a corpus for auto-grading");
    }
    for (const auto& c : *grading.cases) by_id[c.case_id] = &c;
    config.grading = "auto";
  } else {
    config.grading = "grade_file";
  }
  static const GroupingMap kEmpty;
  const GroupingMap& map = grading.map ? *grading.map : kEmpty;

  std::vector<CaseScores> graded;
  int excluded = 0;
  for (auto& s : scores) {
    std::optional<Grade> g;
    if (grading.grades != nullptr) {
      if (const GradeEntry* e = grading.grades->find(s.case_id)) g = final_grade(*e);
    } else if (auto it = by_id.find(s.case_id); it != by_id.end()) {
      g = auto_grade(s.modal_answer, it->second->reference_answer, map);
    }
    if (!g) {
      ++excluded;
      continue;
    }
    s.correct = *g == Grade::kCorrect ? Correctness::kCorrect : Correctness::kIncorrect;
    graded.push_back(std::move(s));
  }
  return build_report(graded, excluded, config);
}

void write_scores(const std::filesystem::path& path, const std::vector<CaseScores>& scores) {
  io::write_file_atomic(path, serialize_scores(scores));
}

}  // namespace llmconf
