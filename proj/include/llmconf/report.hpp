#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmconf/analytics.hpp"
#include "llmconf/sc_engine.hpp"

namespace llmconf {

struct MethodBlock {
  std::string name;
  int n_cases = 0;
  int n_correct = 0;
  double mean_all = 0.0;
  std::optional<RocCurve> roc;
  std::optional<Interval> auc_ci;
  std::optional<MeanDifferenceResult> welch;
  std::optional<MeanDifferenceResult> mann_whitney;
};

struct ReportConfig {
  std::string corpus_sha256;
  std::string model_id;
  int runs_per_case = 11;
  double temperature = 1.0;
  std::optional<double> intrinsic_temperature;
  std::string grading = "grade_file";  // or "auto"
  int bootstrap_resamples = 1000;
  std::uint64_t seed = 42;
  bool cot_length_negated = true;
};

struct EvaluationReport {
  int n_cases = 0;     // scored cases
  int n_graded = 0;
  int n_excluded = 0;  // scored but without a grade
  int n_correct = 0;
  double accuracy = 0.0;
  std::vector<MethodBlock> methods;  // sc, intrinsic, cot length
  std::vector<AgreementBucket> buckets;
  ReportConfig config;
};

inline constexpr const char* kScMethod = "sc_agreement_frequency";
inline constexpr const char* kIntrinsicMethod = "intrinsic_confidence";
inline constexpr const char* kLengthMethod = "cot_response_length";

// `scores` must all be graded; `n_excluded` is echoed into the summary.
EvaluationReport build_report(std::span<const CaseScores> graded, int n_excluded,
                              const ReportConfig& config);

const MethodBlock& method(const EvaluationReport& report, const std::string& name);

// Canonical JSON: fixed key order, reals rounded to 6 significant digits,
// non-finite values as null, no timestamps.
std::string report_to_json(const EvaluationReport& report);
std::string roc_table(const RocCurve& roc);
std::string bucket_table(const EvaluationReport& report);

// Label of a bucket, written k/runs_per_case when that is exact.
std::string frequency_label(const Rational& level, int runs_per_case);

// report.json, agreement_buckets.csv and roc_<method>.csv under `dir`.
void write_report(const std::filesystem::path& dir, const EvaluationReport& report);

double round_sig(double v, int digits = 6);

}  // namespace llmconf
