#pragma once

// Evaluation statistics over graded per-case confidence scores.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmconf/case_store.hpp"
#include "llmconf/grouping.hpp"
#include "llmconf/sc_engine.hpp"

namespace llmconf {

Grade final_grade(const GradeEntry& entry);
Grade auto_grade(const std::string& modal_answer, const std::string& reference_answer,
                 const GroupingMap& map);

// Fraction of cases graded correct. Throws ArgumentError on an empty
// collection or an ungraded case.
double overall_accuracy(std::span<const CaseScores> scores);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = std::numeric_limits<double>::infinity();

  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

// `positive[i]` marks case i as correct. Equal scores form one threshold
// step, so the trapezoidal area equals the Mann-Whitney statistic.
RocCurve roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

// Rank-sum form of the same statistic; no curve is built.
double rank_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

struct Rational {
  long long num = 0;
  long long den = 1;

  static Rational reduced(long long num, long long den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational& o) const { return num * o.den == o.num * den; }
  bool operator<(const Rational& o) const { return num * o.den < o.num * den; }
};

struct AgreementBucket {
  Rational frequency_level;
  int n_cases = 0;
  int n_correct = 0;
  double accuracy = 0.0;
};

// One bucket per distinct modal_count/usable_runs value, ascending.
std::vector<AgreementBucket> accuracy_by_agreement(std::span<const CaseScores> scores);

enum class TestName { kWelchT, kMannWhitneyU };
std::string to_string(TestName t);

struct MeanDifferenceResult {
  double mean_correct = 0.0;
  double mean_incorrect = 0.0;
  double difference = 0.0;
  double statistic = 0.0;  // Welch t, or U of the correct sample
  double p_value = 1.0;
  double degrees_of_freedom = 0.0;  // Welch only
  bool exact = false;               // Mann-Whitney by enumeration
  bool degenerate = false;
  TestName test = TestName::kWelchT;
};

MeanDifferenceResult mean_difference_test(std::span<const double> correct,
                                          std::span<const double> incorrect, TestName test);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile 95% interval over `resamples` case-level bootstrap draws.
// Resample b draws from substream (seed, b), so the result does not depend
// on the number of worker threads.
Interval bootstrap_auc_ci(std::span<const double> scores, std::span<const std::uint8_t> positive,
                          int resamples, std::uint64_t seed);

// Linear-interpolated percentile (q in [0,1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

// Negated length by default: shorter responses rank as more likely correct.
double cot_length_score(double mean_cot_length, bool negate = true);

}  // namespace llmconf
