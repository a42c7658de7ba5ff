#include "llmconf/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "llmconf/errors.hpp"
#include "llmconf/kernels.hpp"
#include "llmconf/special_functions.hpp"

namespace llmconf {

Grade final_grade(const GradeEntry& e) {
  if (e.grader_1 == e.grader_2) return e.grader_1;
  if (!e.grader_3) {
    throw AdjudicationRequired("graders disagree on " + e.case_id + " and no third grade exists");
  }
  return *e.grader_3;
}

Grade auto_grade(const std::string& modal_answer, const std::string& reference_answer,
                 const GroupingMap& map) {
  return assign_group(reference_answer, map) == modal_answer ? Grade::kCorrect
                                                             : Grade::kIncorrect;
}

double overall_accuracy(std::span<const CaseScores> scores) {
  if (scores.empty()) throw ArgumentError("no cases to score");
  std::size_t correct = 0;
  for (const auto& s : scores) {
    if (s.correct == Correctness::kUngraded) {
      throw ArgumentError("case " + s.case_id + " is ungraded");
    }
    if (s.correct == Correctness::kCorrect) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

namespace {

struct ClassCounts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) {
    throw ArgumentError("scores and labels differ in length");
  }
  ClassCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw ArgumentError("scores must be finite");
    (positive[i] ? c.pos : c.neg)++;
  }
  if (c.pos == 0 || c.neg == 0) {
    throw DegenerateLabelsError("ROC needs at least one correct and one incorrect case");
  }
  return c;
}

}  // namespace

RocCurve roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  const ClassCounts counts = check_inputs(scores, positive);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0, fp = 0;
  std::int64_t twice_area = 0;
  const double p = static_cast<double>(counts.pos);
  const double n = static_cast<double>(counts.neg);
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    const std::int64_t tp_prev = tp, fp_prev = fp;
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      (positive[order[i]] ? tp : fp)++;
    }
    twice_area += (fp - fp_prev) * (tp + tp_prev);
    curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, threshold});
  }
  curve.auc = static_cast<double>(twice_area) / (2.0 * p * n);
  return curve;
}

double rank_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  const ClassCounts counts = check_inputs(scores, positive);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the positive rank sum, with tied values sharing their mid-rank.
  std::int64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += positive[order[j]] ? 1 : 0;
      ++j;
    }
    const auto first_rank = static_cast<std::int64_t>(i) + 1;
    const auto last_rank = static_cast<std::int64_t>(j);
    twice_rank_sum += pos_in_group * (first_rank + last_rank);
    i = j;
  }
  const std::int64_t twice_u = twice_rank_sum - counts.pos * (counts.pos + 1);
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(counts.pos) * static_cast<double>(counts.neg));
}

Rational Rational::reduced(long long num, long long den) {
  if (den <= 0) throw ArgumentError("rational denominator must be positive");
  const long long g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

std::vector<AgreementBucket> accuracy_by_agreement(std::span<const CaseScores> scores) {
  std::map<Rational, AgreementBucket> buckets;
  for (const auto& s : scores) {
    if (s.correct == Correctness::kUngraded) {
      throw ArgumentError("case " + s.case_id + " is ungraded");
    }
    const Rational level = Rational::reduced(s.modal_count, s.usable_runs);
    auto& b = buckets[level];
    b.frequency_level = level;
    ++b.n_cases;
    if (s.correct == Correctness::kCorrect) ++b.n_correct;
  }
  std::vector<AgreementBucket> out;
  for (auto& [level, b] : buckets) {
    b.accuracy = static_cast<double>(b.n_correct) / b.n_cases;
    out.push_back(b);
  }
  return out;
}

std::string to_string(TestName t) {
  return t == TestName::kWelchT ? "welch_t" : "mann_whitney_u";
}

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

void welch(std::span<const double> a, std::span<const double> b, MeanDifferenceResult& r) {
  if (a.size() < 2 || b.size() < 2) {
    throw ArgumentError("Welch's t-test needs at least two values per group");
  }
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double se1 = sample_variance(a, r.mean_correct) / n1;
  const double se2 = sample_variance(b, r.mean_incorrect) / n2;
  const double se = se1 + se2;
  if (se == 0.0) {
    r.degenerate = true;
    if (r.difference == 0.0) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = std::copysign(std::numeric_limits<double>::infinity(), r.difference);
      r.p_value = 0.0;
    }
    return;
  }
  r.statistic = r.difference / std::sqrt(se);
  r.degrees_of_freedom = se * se / (se1 * se1 / (n1 - 1.0) + se2 * se2 / (n2 - 1.0));
  r.p_value = std::min(1.0, special::student_t_two_sided(r.statistic, r.degrees_of_freedom));
}

void mann_whitney(std::span<const double> a, std::span<const double> b,
                  MeanDifferenceResult& r) {
  if (a.empty() || b.empty()) {
    throw ArgumentError("Mann-Whitney U needs at least one value per group");
  }
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());

  // Doubled mid-ranks so every quantity below is an integer.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return all[x] < all[y]; });
  std::vector<std::int64_t> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[order[j]] == all[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      rank2[order[k]] = static_cast<std::int64_t>(i + 1 + j);
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  const auto nn1 = static_cast<std::int64_t>(n1), nn2 = static_cast<std::int64_t>(n2);
  std::int64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n1; ++i) twice_rank_sum += rank2[i];
  const std::int64_t twice_u = twice_rank_sum - nn1 * (nn1 + 1);
  r.statistic = static_cast<double>(twice_u) / 2.0;

  if (n <= 16) {
    r.exact = true;
    const std::int64_t observed = std::llabs(twice_u - nn1 * nn2);
    std::uint64_t extreme = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
      std::int64_t s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) s += rank2[i];
      }
      ++total;
      if (std::llabs(s - nn1 * (nn1 + 1) - nn1 * nn2) >= observed) ++extreme;
    }
    r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    if (observed == 0 && tie_term == static_cast<double>(n * n * n - n)) r.degenerate = true;
    return;
  }

  const double dn = static_cast<double>(n);
  const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                     ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    r.degenerate = true;
    r.p_value = 1.0;
    return;
  }
  const double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double z = std::max(0.0, std::fabs(r.statistic - mu) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, 2.0 * special::normal_sf(z));
}

}  // namespace

MeanDifferenceResult mean_difference_test(std::span<const double> correct,
                                          std::span<const double> incorrect, TestName test) {
  if (correct.empty() || incorrect.empty()) {
    throw ArgumentError("both groups need at least one value");
  }
  MeanDifferenceResult r;
  r.test = test;
  r.mean_correct = mean_of(correct);
  r.mean_incorrect = mean_of(incorrect);
  r.difference = r.mean_correct - r.mean_incorrect;
  if (test == TestName::kWelchT) {
    welch(correct, incorrect, r);
  } else {
    mann_whitney(correct, incorrect, r);
  }
  return r;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Interval bootstrap_auc_ci(std::span<const double> scores, std::span<const std::uint8_t> positive,
                          int resamples, std::uint64_t seed) {
  if (resamples < 100) throw ArgumentError("bootstrap needs at least 100 resamples");
  check_inputs(scores, positive);
  const auto reps = kernels::bootstrap_auc_parallel(scores, positive, resamples, seed);
  std::vector<double> valid;
  valid.reserve(reps.size());
  for (double v : reps) {
    if (!std::isnan(v)) valid.push_back(v);
  }
  if (valid.empty()) throw DegenerateLabelsError("every bootstrap resample was single-class");
  return {percentile(valid, 0.025), percentile(std::move(valid), 0.975)};
}

double cot_length_score(double mean_cot_length, bool negate) {
  if (mean_cot_length < 0.0) throw ArgumentError("length must be >= 0");
  return negate ? -mean_cot_length : mean_cot_length;
}

}  // namespace llmconf
