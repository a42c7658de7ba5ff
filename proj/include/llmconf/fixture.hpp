#pragma once

// Seeded synthetic corpus, ledger and grade file whose analytics land on
// fixed headline targets. Used as the frozen acceptance fixture.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "llmconf/case_store.hpp"
#include "llmconf/grouping.hpp"
#include "llmconf/report.hpp"

namespace llmconf {

struct BucketTarget {
  int agreeing = 0;  // runs in the modal group
  int n_cases = 0;
  int n_correct = 0;
};

struct FixtureSpec {
  std::uint64_t seed = 42;
  int runs_per_case = 11;
  std::vector<BucketTarget> buckets = {
      {11, 48, 36}, {10, 18, 10}, {9, 17, 7}, {8, 16, 6}, {7, 17, 6},
      {6, 16, 6},   {5, 17, 6},   {4, 14, 3}, {3, 14, 0}, {2, 14, 0},
  };
  double intrinsic_mean_correct = 0.79;
  double intrinsic_mean_incorrect = 0.64;
  double length_mean_correct = 1094.0;
  double length_mean_incorrect = 1107.0;
  double target_auc_sc = 0.77;
  double target_auc_intrinsic = 0.71;
  double target_auc_length = 0.59;
  // Welch p-value the length difference is tuned to; <= 0 tunes the length
  // spread on its AUC instead.
  double target_length_p = 0.02;
  double max_intrinsic_p = 0.001;
  double auc_tolerance = 0.02;     // final acceptance band
  double tuning_tolerance = 0.005; // band the tuner aims for
  int reask_cases = 6;             // first confidence reply unparseable
  int grader_disagreements = 19;
  std::string model_id = "synthetic-replay";

  int n_cases() const;
  int n_correct() const;
  // Throws GenerationError when targets cannot be met with integral counts.
  void validate() const;
};

struct FixtureStats {
  int n_cases = 0;
  int n_correct = 0;
  double accuracy = 0.0;
  double unanimous_accuracy = 0.0;
  double accuracy_2 = 0.0;  // 2/N bucket
  double accuracy_3 = 0.0;  // 3/N bucket
  double intrinsic_mean_correct = 0.0;
  double intrinsic_mean_incorrect = 0.0;
  double length_mean_correct = 0.0;
  double length_mean_incorrect = 0.0;
  double auc_sc = 0.0;
  double auc_intrinsic = 0.0;
  double auc_length = 0.0;
  double intrinsic_p = 1.0;  // Welch
  double length_p = 1.0;
  double intrinsic_sd = 0.0;  // tuned generator parameters
  double length_sd = 0.0;
};

struct Fixture {
  std::vector<ClinicalCase> cases;
  RunLedger ledger;
  GradeFile grades;
  std::string synonyms_json;
  FixtureStats stats;
};

Fixture generate_fixture(const FixtureSpec& spec);

// Reads the headline numbers back out of a report.
FixtureStats stats_from_report(const EvaluationReport& report);

// cases.csv, ledger.jsonl, grades.csv, synonyms.json and SHA256SUMS.
void write_fixture(const std::filesystem::path& dir, const Fixture& fixture);

// Recomputes SHA256SUMS entries; returns the names of files that differ.
std::vector<std::string> verify_fixture_checksums(const std::filesystem::path& dir);

}  // namespace llmconf
