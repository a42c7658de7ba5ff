#include <gtest/gtest.h>

#include <random>

#include "llmconf/analytics.hpp"
#include "llmconf/errors.hpp"
#include "llmconf/kernels.hpp"
#include "llmconf/special_functions.hpp"
#include "oracles.hpp"

using namespace llmconf;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

// 2..30 cases, both classes present, scores on a coarse grid so ties are common.
Instance random_instance(std::mt19937_64& rng) {
  Instance in;
  const int n = 2 + static_cast<int>(rng() % 29);
  const int levels = 1 + static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) {
    in.scores.push_back(static_cast<double>(rng() % levels) / levels);
    in.labels.push_back(static_cast<std::uint8_t>(rng() % 2));
  }
  in.labels[0] = 1;
  in.labels[1] = 0;
  return in;
}

CaseScores graded(double freq, int k, int n, bool correct) {
  CaseScores s;
  s.case_id = "c";
  s.modal_answer = "a";
  s.sc_agreement_frequency = freq;
  s.modal_count = k;
  s.usable_runs = n;
  s.correct = correct ? Correctness::kCorrect : Correctness::kIncorrect;
  return s;
}

}  // namespace

TEST(FinalGrade, Rules) {
  EXPECT_EQ(final_grade({"c", Grade::kCorrect, Grade::kCorrect, std::nullopt}), Grade::kCorrect);
  EXPECT_EQ(final_grade({"c", Grade::kCorrect, Grade::kIncorrect, Grade::kIncorrect}),
            Grade::kIncorrect);
  EXPECT_THROW(final_grade({"c", Grade::kIncorrect, Grade::kCorrect, std::nullopt}),
               AdjudicationRequired);
}

TEST(AutoGrade, Rules) {
  GroupingMap map;
  map.add("lyme carditis", {"lyme disease-induced heart block", "lyme disease-induced carditis"});
  EXPECT_EQ(auto_grade("lyme carditis", "Lyme disease-induced carditis", map), Grade::kCorrect);
  EXPECT_EQ(auto_grade("infantile botulism", "acid maltase deficiency", map), Grade::kIncorrect);
  EXPECT_EQ(auto_grade("whipple disease", "Whipple disease.", GroupingMap{}), Grade::kCorrect);
  EXPECT_THROW(auto_grade("x", "???", GroupingMap{}), NormalizationError);
}

TEST(OverallAccuracy, Examples) {
  std::vector<CaseScores> s;
  for (int i = 0; i < 191; ++i) s.push_back(graded(1.0, 11, 11, i < 80));
  EXPECT_DOUBLE_EQ(overall_accuracy(s), 80.0 / 191.0);
  EXPECT_NEAR(overall_accuracy(s), 0.41885, 5e-6);
  std::vector<CaseScores> all(3, graded(1.0, 11, 11, true));
  EXPECT_EQ(overall_accuracy(all), 1.0);
  EXPECT_THROW(overall_accuracy(std::vector<CaseScores>{}), ArgumentError);
}

TEST(RocAuc, PerfectSeparation) {
  const auto roc = roc_auc(std::vector{0.9, 0.8, 0.2, 0.1}, std::vector<std::uint8_t>{1, 1, 0, 0});
  EXPECT_EQ(roc.auc, 1.0);
}

TEST(RocAuc, ThreeOfFourPairsConcordant) {
  const std::vector<double> s = {0.9, 0.7, 0.8, 0.3};
  const std::vector<std::uint8_t> l = {1, 1, 0, 0};
  EXPECT_EQ(roc_auc(s, l).auc, 0.75);
  EXPECT_EQ(oracle::pair_count_auc(s, l), 0.75);
}

TEST(RocAuc, AllEqualScoresIsHalf) {
  const auto roc = roc_auc(std::vector(6, 0.4), std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1});
  EXPECT_EQ(roc.auc, 0.5);
  ASSERT_EQ(roc.points.size(), 2u);
}

TEST(RocAuc, Errors) {
  EXPECT_THROW(roc_auc(std::vector{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}),
               DegenerateLabelsError);
  EXPECT_THROW(roc_auc(std::vector{0.1, std::nan("")}, std::vector<std::uint8_t>{1, 0}),
               ArgumentError);
}

TEST(RocAuc, CurveShapeAndOracleEquivalence) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto in = random_instance(rng);
    const auto roc = roc_auc(in.scores, in.labels);
    const double expected = oracle::pair_count_auc(in.scores, in.labels);
    EXPECT_NEAR(roc.auc, expected, 1e-12);
    EXPECT_NEAR(rank_auc(in.scores, in.labels), expected, 1e-12);
    EXPECT_EQ(roc.points.front(), (RocPoint{0.0, 0.0}));
    EXPECT_EQ(roc.points.back().fpr, 1.0);
    EXPECT_EQ(roc.points.back().tpr, 1.0);
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
      EXPECT_GE(roc.points[k].fpr, roc.points[k - 1].fpr);
      EXPECT_GE(roc.points[k].tpr, roc.points[k - 1].tpr);
      EXPECT_LT(roc.points[k].threshold, roc.points[k - 1].threshold);
    }
  }
}

TEST(RocAuc, ComplementSymmetryAndMonotoneInvariance) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto in = random_instance(rng);
    auto flipped = in.labels;
    for (auto& l : flipped) l = l ? 0 : 1;
    const auto roc = roc_auc(in.scores, in.labels);
    EXPECT_NEAR(roc.auc + roc_auc(in.scores, flipped).auc, 1.0, 1e-12);

    std::vector<double> transformed;
    for (double s : in.scores) transformed.push_back(std::exp(3.0 * s) - 7.0);
    const auto roc2 = roc_auc(transformed, in.labels);
    EXPECT_EQ(roc2.auc, roc.auc);
    ASSERT_EQ(roc2.points.size(), roc.points.size());
    for (std::size_t k = 0; k < roc.points.size(); ++k) {
      EXPECT_EQ(roc2.points[k].fpr, roc.points[k].fpr);
      EXPECT_EQ(roc2.points[k].tpr, roc.points[k].tpr);
    }
  }
}

TEST(Buckets, ExactRationalLevelsPartitionCases) {
  std::vector<CaseScores> s = {graded(5.0 / 11, 5, 11, true), graded(10.0 / 11, 10, 11, false),
                               graded(10.0 / 11, 10, 11, true), graded(4.0 / 8, 4, 8, false),
                               graded(1.0, 11, 11, true)};
  const auto buckets = accuracy_by_agreement(s);
  // 4/8 and 5/11 are distinct levels; 4/8 == 1/2 sorts after 5/11.
  ASSERT_EQ(buckets.size(), 4u);
  EXPECT_EQ(buckets[0].frequency_level, Rational::reduced(5, 11));
  EXPECT_EQ(buckets[0].n_cases, 1);
  EXPECT_EQ(buckets[0].n_correct, 1);
  EXPECT_EQ(buckets[0].accuracy, 1.0);
  EXPECT_EQ(buckets[1].frequency_level, Rational::reduced(1, 2));
  EXPECT_EQ(buckets[2].n_cases, 2);
  EXPECT_EQ(buckets[2].accuracy, 0.5);
  int n = 0, c = 0;
  for (const auto& b : buckets) {
    n += b.n_cases;
    c += b.n_correct;
  }
  EXPECT_EQ(n, 5);
  EXPECT_EQ(c, 3);
}

TEST(Welch, IdenticalSamplesGiveNoEffect) {
  const std::vector<double> a = {0.7, 0.8, 0.9};
  const auto r = mean_difference_test(a, a, TestName::kWelchT);
  EXPECT_EQ(r.difference, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Welch, ZeroVarianceEqualMeansIsDegenerate) {
  const std::vector<double> a = {0.5, 0.5}, b = {0.5, 0.5, 0.5};
  const auto r = mean_difference_test(a, b, TestName::kWelchT);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_TRUE(r.degenerate);
}

TEST(Welch, MatchesQuadratureReferenceAndIsSymmetric) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> a, b;
    const int na = 2 + static_cast<int>(rng() % 20), nb = 2 + static_cast<int>(rng() % 20);
    const double shift = 0.3 * static_cast<double>(rng() % 7);
    for (int k = 0; k < na; ++k) a.push_back(z(rng) + shift);
    for (int k = 0; k < nb; ++k) b.push_back(2.0 * z(rng));
    const auto r = mean_difference_test(a, b, TestName::kWelchT);
    const auto ref = oracle::welch(a, b);
    EXPECT_NEAR(r.statistic, ref.t, 1e-9 * std::max(1.0, std::fabs(ref.t)));
    EXPECT_NEAR(r.degrees_of_freedom, ref.df, 1e-9 * ref.df);
    EXPECT_NEAR(r.p_value, ref.p, 1e-6);
    EXPECT_GT(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    const auto swapped = mean_difference_test(b, a, TestName::kWelchT);
    EXPECT_DOUBLE_EQ(swapped.statistic, -r.statistic);
    EXPECT_DOUBLE_EQ(swapped.p_value, r.p_value);
    EXPECT_DOUBLE_EQ(r.difference, r.mean_correct - r.mean_incorrect);
  }
}

TEST(Welch, TooFewValuesRejected) {
  EXPECT_THROW(mean_difference_test(std::vector{1.0}, std::vector{1.0, 2.0}, TestName::kWelchT),
               ArgumentError);
}

TEST(MannWhitney, SymmetricSamplesGivePOne) {
  const std::vector<double> a = {1, 2, 3};
  const auto r = mean_difference_test(a, a, TestName::kMannWhitneyU);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_TRUE(r.exact);
}

TEST(MannWhitney, ExactMatchesPermutationEnumeration) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 300; ++i) {
    const int n = 2 + static_cast<int>(rng() % 7);  // combined 2..8
    const int na = 1 + static_cast<int>(rng() % (n - 1));
    std::vector<double> a, b;
    for (int k = 0; k < n; ++k) (k < na ? a : b).push_back(static_cast<double>(rng() % 5));
    const auto r = mean_difference_test(a, b, TestName::kMannWhitneyU);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.p_value, oracle::permutation_mw_p(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(2.0 * r.statistic, static_cast<double>(oracle::twice_u(a, b)));
  }
}

TEST(MannWhitney, LargeSamplesUseNormalApproximation) {
  std::vector<double> a, b;
  for (int i = 0; i < 20; ++i) {
    a.push_back(i);
    b.push_back(i + 5);
  }
  const auto r = mean_difference_test(a, b, TestName::kMannWhitneyU);
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LT(r.p_value, 0.05);
}

TEST(Bootstrap, PerfectSeparationCollapsesToOne) {
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (int i = 0; i < 40; ++i) {
    s.push_back(i < 20 ? 1.0 + i : -1.0 - i);
    l.push_back(i < 20);
  }
  const auto ci = bootstrap_auc_ci(s, l, 500, 42);
  EXPECT_EQ(ci.low, 1.0);
  EXPECT_EQ(ci.high, 1.0);
}

TEST(Bootstrap, SeedDeterministicAndSerialEqualsParallel) {
  std::mt19937_64 rng(6);
  auto in = random_instance(rng);
  while (in.scores.size() < 20) in = random_instance(rng);
  const auto a = bootstrap_auc_ci(in.scores, in.labels, 400, 9);
  const auto b = bootstrap_auc_ci(in.scores, in.labels, 400, 9);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  const auto serial = kernels::bootstrap_auc_serial(in.scores, in.labels, 400, 9);
  const auto parallel = kernels::bootstrap_auc_parallel(in.scores, in.labels, 400, 9);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    if (std::isnan(serial[i])) {
      EXPECT_TRUE(std::isnan(parallel[i]));
    } else {
      EXPECT_EQ(serial[i], parallel[i]);
    }
  }
}

TEST(Bootstrap, IntervalUsuallyContainsPointAuc) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  int contained = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> s;
    std::vector<std::uint8_t> l;
    for (int i = 0; i < 60; ++i) {
      const bool pos = i % 3 == 0;
      l.push_back(pos);
      s.push_back(z(rng) + (pos ? 0.8 : 0.0));
    }
    const auto ci = bootstrap_auc_ci(s, l, 200, static_cast<std::uint64_t>(t));
    const double auc = roc_auc(s, l).auc;
    contained += ci.low <= auc && auc <= ci.high;
  }
  EXPECT_GE(contained, trials * 99 / 100);
}

TEST(Bootstrap, RejectsTooFewResamples) {
  EXPECT_THROW(bootstrap_auc_ci(std::vector{0.1, 0.2}, std::vector<std::uint8_t>{1, 0}, 99, 1),
               ArgumentError);
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_EQ(percentile({3, 1, 2, 4}, 0.0), 1.0);
  EXPECT_EQ(percentile({3, 1, 2, 4}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 0.5), 2.5);
}

TEST(CotLengthScore, Orientation) {
  EXPECT_EQ(cot_length_score(1094), -1094.0);
  EXPECT_EQ(cot_length_score(1107), -1107.0);
  EXPECT_LT(cot_length_score(1107), cot_length_score(1094));
  EXPECT_EQ(cot_length_score(1094, false), 1094.0);
  EXPECT_THROW(cot_length_score(-1), ArgumentError);
}

TEST(SpecialFunctions, KnownValues) {
  EXPECT_NEAR(special::incomplete_beta(2, 3, 0.4), 0.5248, 1e-12);
  EXPECT_NEAR(special::incomplete_beta(0.5, 0.5, 0.5), 0.5, 1e-12);
  EXPECT_NEAR(special::student_t_two_sided(2.0, 10), 0.07338803477074855, 1e-10);
  EXPECT_NEAR(special::student_t_two_sided(1.0, 1), 0.5, 1e-12);
  EXPECT_EQ(special::student_t_two_sided(0.0, 5), 1.0);
  EXPECT_NEAR(special::normal_sf(1.959963984540054), 0.025, 1e-12);
}
