#include "llmconf/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "llmconf/errors.hpp"
#include "llmconf/io.hpp"

namespace llmconf {

using ojson = nlohmann::ordered_json;

double round_sig(double v, int digits) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

namespace {

ojson real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig(v);
}

std::string table_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

MethodBlock evaluate(const std::string& name, const std::vector<double>& roc_scores,
                     const std::vector<double>& raw, const std::vector<std::uint8_t>& labels,
                     const ReportConfig& config) {
  MethodBlock m;
  m.name = name;
  m.n_cases = static_cast<int>(raw.size());
  std::vector<double> pos, neg;
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    (labels[i] ? pos : neg).push_back(raw[i]);
    total += raw[i];
  }
  m.n_correct = static_cast<int>(pos.size());
  m.mean_all = raw.empty() ? 0.0 : total / static_cast<double>(raw.size());
  if (pos.empty() || neg.empty()) return m;
  m.roc = roc_auc(roc_scores, labels);
  try {
    m.auc_ci = bootstrap_auc_ci(roc_scores, labels, config.bootstrap_resamples, config.seed);
  } catch (const DegenerateLabelsError&) {
    // Too few cases for any two-class resample; the interval stays absent.
  }
  if (pos.size() >= 2 && neg.size() >= 2) {
    m.welch = mean_difference_test(pos, neg, TestName::kWelchT);
  }
  m.mann_whitney = mean_difference_test(pos, neg, TestName::kMannWhitneyU);
  return m;
}

ojson test_json(const MeanDifferenceResult& r) {
  ojson j;
  j["test"] = to_string(r.test);
  j["mean_correct"] = real(r.mean_correct);
  j["mean_incorrect"] = real(r.mean_incorrect);
  j["difference"] = real(r.difference);
  j["statistic"] = real(r.statistic);
  j["p_value"] = real(r.p_value);
  if (r.test == TestName::kWelchT) {
    j["degrees_of_freedom"] = real(r.degrees_of_freedom);
  } else {
    j["exact"] = r.exact;
  }
  j["degenerate"] = r.degenerate;
  return j;
}

}  // namespace

EvaluationReport build_report(std::span<const CaseScores> graded, int n_excluded,
                              const ReportConfig& config) {
  EvaluationReport r;
  r.config = config;
  r.n_cases = static_cast<int>(graded.size()) + n_excluded;
  r.n_graded = static_cast<int>(graded.size());
  r.n_excluded = n_excluded;
  if (graded.empty()) return r;
  r.accuracy = overall_accuracy(graded);
  for (const auto& s : graded) r.n_correct += s.correct == Correctness::kCorrect ? 1 : 0;

  std::vector<double> sc, conf, len_score, len_raw;
  std::vector<std::uint8_t> labels, conf_labels;
  for (const auto& s : graded) {
    const std::uint8_t y = s.correct == Correctness::kCorrect ? 1 : 0;
    labels.push_back(y);
    sc.push_back(s.sc_agreement_frequency);
    len_raw.push_back(s.mean_cot_length);
    len_score.push_back(cot_length_score(s.mean_cot_length, config.cot_length_negated));
    if (s.intrinsic_confidence) {
      conf.push_back(*s.intrinsic_confidence);
      conf_labels.push_back(y);
    }
  }
  r.methods.push_back(evaluate(kScMethod, sc, sc, labels, config));
  r.methods.push_back(evaluate(kIntrinsicMethod, conf, conf, conf_labels, config));
  r.methods.push_back(evaluate(kLengthMethod, len_score, len_raw, labels, config));
  r.buckets = accuracy_by_agreement(graded);
  return r;
}

const MethodBlock& method(const EvaluationReport& report, const std::string& name) {
  for (const auto& m : report.methods) {
    if (m.name == name) return m;
  }
  throw ArgumentError("report has no method " + name);
}

std::string frequency_label(const Rational& level, int runs_per_case) {
  if (runs_per_case > 0 && (level.num * runs_per_case) % level.den == 0) {
    return std::to_string(level.num * runs_per_case / level.den) + "/" +
           std::to_string(runs_per_case);
  }
  return std::to_string(level.num) + "/" + std::to_string(level.den);
}

std::string report_to_json(const EvaluationReport& r) {
  ojson j;
  ojson corpus;
  corpus["n_cases"] = r.n_cases;
  corpus["n_graded"] = r.n_graded;
  corpus["n_excluded_ungraded"] = r.n_excluded;
  corpus["n_correct"] = r.n_correct;
  corpus["accuracy"] = real(r.accuracy);
  j["corpus"] = corpus;

  ojson methods = ojson::array();
  for (const auto& m : r.methods) {
    ojson b;
    b["name"] = m.name;
    b["n_cases"] = m.n_cases;
    b["n_correct"] = m.n_correct;
    b["mean_all"] = real(m.mean_all);
    b["auc"] = m.roc ? real(m.roc->auc) : ojson(nullptr);
    b["auc_ci_95"] = m.auc_ci ? ojson::array({real(m.auc_ci->low), real(m.auc_ci->high)})
                              : ojson(nullptr);
    b["mean_difference"] = m.welch ? test_json(*m.welch) : ojson(nullptr);
    b["mann_whitney"] = m.mann_whitney ? test_json(*m.mann_whitney) : ojson(nullptr);
    ojson roc = ojson::array();
    if (m.roc) {
      for (const auto& p : m.roc->points) {
        roc.push_back(ojson::array({real(p.fpr), real(p.tpr), real(p.threshold)}));
      }
    }
    b["roc"] = std::move(roc);
    methods.push_back(std::move(b));
  }
  j["methods"] = std::move(methods);

  ojson buckets = ojson::array();
  int bucket_cases = 0, bucket_correct = 0;
  for (const auto& b : r.buckets) {
    ojson o;
    o["frequency_level"] = frequency_label(b.frequency_level, r.config.runs_per_case);
    o["value"] = real(b.frequency_level.value());
    o["n_cases"] = b.n_cases;
    o["n_correct"] = b.n_correct;
    o["accuracy"] = real(b.accuracy);
    buckets.push_back(std::move(o));
    bucket_cases += b.n_cases;
    bucket_correct += b.n_correct;
  }
  j["agreement_buckets"] = std::move(buckets);
  j["agreement_totals"] = ojson{{"n_cases", bucket_cases}, {"n_correct", bucket_correct}};

  ojson cfg;
  cfg["corpus_sha256"] = r.config.corpus_sha256;
  cfg["model_id"] = r.config.model_id;
  cfg["runs_per_case"] = r.config.runs_per_case;
  cfg["temperature"] = real(r.config.temperature);
  cfg["intrinsic_temperature"] =
      r.config.intrinsic_temperature ? real(*r.config.intrinsic_temperature) : ojson(nullptr);
  cfg["grading"] = r.config.grading;
  cfg["bootstrap_resamples"] = r.config.bootstrap_resamples;
  cfg["seed"] = r.config.seed;
  cfg["cot_length_negated"] = r.config.cot_length_negated;
  j["config"] = std::move(cfg);
  return j.dump(2) + "\n";
}

std::string roc_table(const RocCurve& roc) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : roc.points) {
    out += table_real(p.fpr) + "," + table_real(p.tpr) + "," + table_real(p.threshold) + "\n";
  }
  return out;
}

std::string bucket_table(const EvaluationReport& r) {
  std::string out = "frequency_level,value,n_cases,n_correct,accuracy\n";
  for (const auto& b : r.buckets) {
    out += frequency_label(b.frequency_level, r.config.runs_per_case) + "," +
           table_real(b.frequency_level.value()) + "," + std::to_string(b.n_cases) + "," +
           std::to_string(b.n_correct) + "," + table_real(b.accuracy) + "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const EvaluationReport& report) {
  io::write_file_atomic(dir / "report.json", report_to_json(report));
  io::write_file_atomic(dir / "agreement_buckets.csv", bucket_table(report));
  for (const auto& m : report.methods) {
    if (m.roc) io::write_file_atomic(dir / ("roc_" + m.name + ".csv"), roc_table(*m.roc));
  }
}

}  // namespace llmconf
