// llmconf: sample, score, report, fixture, suggest.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "llmconf/case_store.hpp"
#include "llmconf/errors.hpp"
#include "llmconf/fixture.hpp"
#include "llmconf/grouping.hpp"
#include "llmconf/io.hpp"
#include "llmconf/model_gateway.hpp"
#include "llmconf/pipeline.hpp"
#include "llmconf/prompting.hpp"
#include "llmconf/report.hpp"
#include "llmconf/sc_engine.hpp"

namespace fs = std::filesystem;
using namespace llmconf;

namespace {

struct Options {
  std::string cases;
  std::string ledger;
  std::string replay_ledger;
  std::string synonyms;
  std::string grades;
  std::string scores;
  std::string out;
  int runs = 11;
  double temperature = 1.0;
  double intrinsic_temperature = 0.0;
  bool intrinsic_per_run = false;
  std::string provider = "live";
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  int max_inflight = 4;
  int retry_attempts = 5;
  bool auto_grade = false;
  std::uint64_t seed = 42;
  int resamples = 1000;
  std::string cot_template;
  std::string confidence_template;
  int max_distance = 3;
};

GroupingMap synonyms_or_empty(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) {
    std::cerr << "warning: synonym file " << path << " not found; using an empty map\n";
    return {};
  }
  return load_grouping_map(path);
}

SamplingConfig sampling_config(const Options& o, const std::string& model_id) {
  SamplingConfig cfg;
  cfg.runs_per_case = o.runs;
  cfg.sc_temperature = o.temperature;
  cfg.intrinsic_temperature = o.intrinsic_temperature;
  cfg.intrinsic_per_run = o.intrinsic_per_run;
  cfg.model_id = model_id;
  cfg.validate();
  return cfg;
}

int run_sample(const Options& o) {
  const auto cases = load_corpus(o.cases);
  const std::string sha = io::sha256_file(o.cases);
  const auto map = synonyms_or_empty(o.synonyms);
  const auto cot = o.cot_template.empty()
                       ? default_cot_template()
                       : load_template(o.cot_template, PromptTemplate::Name::kCotDiagnosis);
  const auto conf = o.confidence_template.empty()
                        ? default_confidence_template()
                        : load_template(o.confidence_template,
                                        PromptTemplate::Name::kIntrinsicConfidence);

  std::unique_ptr<Provider> provider;
  std::string model_id = o.model;
  if (o.provider == "replay") {
    const std::string source = o.replay_ledger.empty() ? o.ledger : o.replay_ledger;
    if (o.replay_ledger.empty() || fs::absolute(o.replay_ledger) == fs::absolute(o.ledger)) {
      throw ArgumentError("--provider replay needs --replay-ledger distinct from --ledger");
    }
    auto recorded = load_ledger(source);
    model_id = recorded.header().model_id;
    provider = std::make_unique<ReplayProvider>(std::move(recorded));
  } else {
    const char* key = std::getenv("LLM_API_KEY");
    if (key == nullptr || *key == '\0') {
      throw ArgumentError("LLM_API_KEY must be set for the live provider");
    }
    HttpProviderConfig hc;
    hc.base_url = o.base_url;
    hc.api_key = key;
    hc.max_inflight = o.max_inflight;
    hc.retry.max_attempts = o.retry_attempts;
    provider = std::make_unique<HttpProvider>(hc);
  }

  const auto cfg = sampling_config(o, model_id);
  const auto result = cmd_sample(cases, sha, o.ledger, cfg, *provider, map, cot, conf);
  std::cout << "cases completed: " << result.cases_completed
            << "\ncases already complete: " << result.cases_skipped
            << "\nrecords appended: " << result.records_appended << "\n";
  if (result.aborted) {
    std::cerr << "error: sampling aborted: " << result.abort_reason << "\n";
    return 3;
  }
  return 0;
}

int run_score(const Options& o) {
  const auto ledger = load_ledger(o.ledger);
  const auto map = synonyms_or_empty(o.synonyms);
  std::optional<std::vector<ClinicalCase>> cases;
  if (!o.cases.empty()) cases = load_corpus(o.cases);
  Options eff = o;
  eff.runs = ledger.header().runs_per_case;
  eff.temperature = ledger.header().temperature;
  const auto cfg = sampling_config(eff, ledger.header().model_id);
  const auto result = cmd_score(ledger, map, cfg, cases ? &*cases : nullptr);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path path = o.out.empty() ? fs::path("scores.csv") : fs::path(o.out) / "scores.csv";
  write_scores(path, result.scores);
  std::cout << "scored " << result.scores.size() << " cases -> " << path.string() << "\n";
  return 0;
}

int run_report(const Options& o) {
  const auto scores = load_scores(o.scores);
  ReportConfig rc;
  rc.seed = o.seed;
  rc.bootstrap_resamples = o.resamples;
  rc.runs_per_case = o.runs;
  rc.temperature = o.temperature;
  if (!o.ledger.empty()) {
    const auto ledger = load_ledger(o.ledger);
    rc.corpus_sha256 = ledger.header().corpus_sha256;
    rc.model_id = ledger.header().model_id;
    rc.runs_per_case = ledger.header().runs_per_case;
    rc.temperature = ledger.header().temperature;
    for (const auto& r : ledger.records()) {
      if (r.purpose == Purpose::kIntrinsic) {
        rc.intrinsic_temperature = r.temperature;
        break;
      }
    }
  }

  std::optional<GradeFile> grades;
  std::optional<std::vector<ClinicalCase>> cases;
  GroupingMap map;
  GradingInput input;
  if (o.auto_grade) {
    if (o.cases.empty()) throw ArgumentError("--auto-grade needs --cases");
    cases = load_corpus(o.cases);
    map = synonyms_or_empty(o.synonyms);
    input = GradingInput{nullptr, &*cases, &map};
  } else {
    if (o.grades.empty()) throw ArgumentError("report needs --grades or --auto-grade");
    grades = load_grades(o.grades);
    input = GradingInput{&*grades, nullptr, nullptr};
  }
  const auto report = cmd_report(scores, input, rc);
  write_report(o.out, report);
  std::cout << "graded " << report.n_graded << " cases (" << report.n_excluded
            << " excluded), accuracy " << report.n_correct << "/" << report.n_graded << "\n";
  for (const auto& m : report.methods) {
    if (m.roc) std::printf("%-24s AUC %.4f\n", m.name.c_str(), m.roc->auc);
  }
  std::cout << "report written to " << o.out << "\n";
  return 0;
}

int run_fixture(const Options& o) {
  FixtureSpec spec;
  spec.seed = o.seed;
  const auto fx = generate_fixture(spec);
  write_fixture(o.out, fx);
  const auto& s = fx.stats;
  std::printf("%d cases, %d correct\nAUC sc %.4f  intrinsic %.4f  length %.4f\n", s.n_cases,
              s.n_correct, s.auc_sc, s.auc_intrinsic, s.auc_length);
  std::printf("Welch p: intrinsic %.3g  length %.3g\n", s.intrinsic_p, s.length_p);
  std::printf("tuned spreads: confidence %.6f  length %.6f\n", s.intrinsic_sd, s.length_sd);
  std::cout << "fixture written to " << o.out << "\n";
  return 0;
}

int run_suggest(const Options& o) {
  const auto ledger = load_ledger(o.ledger);
  const auto map = synonyms_or_empty(o.synonyms);
  std::set<std::string> labels;
  for (const auto& r : ledger.records()) {
    if (r.purpose != Purpose::kSelfConsistency || !r.ok() || r.extracted_answer.empty()) continue;
    try {
      labels.insert(assign_group(r.extracted_answer, map));
    } catch (const NormalizationError&) {
    }
  }
  for (const auto& s : suggest_merges({labels.begin(), labels.end()}, o.max_distance)) {
    std::cout << s.distance << "\t" << s.a << "\t" << s.b << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-signal evaluation for free-response LLM answers"};
  app.require_subcommand(1);
  Options o;

  auto* sample = app.add_subcommand("sample", "Run self-consistency and intrinsic elicitation");
  sample->add_option("--cases", o.cases, "Corpus CSV")->required()->check(CLI::ExistingFile);
  sample->add_option("--ledger", o.ledger, "Ledger to create or resume")->required();
  sample->add_option("--synonyms", o.synonyms, "Synonym map JSON");
  sample->add_option("--runs", o.runs, "Runs per case")->capture_default_str();
  sample->add_option("--temperature", o.temperature, "Self-consistency temperature")
      ->capture_default_str();
  sample->add_option("--intrinsic-temperature", o.intrinsic_temperature,
                     "Confidence elicitation temperature")
      ->capture_default_str();
  sample->add_flag("--intrinsic-per-run", o.intrinsic_per_run,
                   "Ask for confidence on every run's answer and average");
  sample->add_option("--provider", o.provider, "live or replay")
      ->check(CLI::IsMember({"live", "replay"}))
      ->capture_default_str();
  sample->add_option("--replay-ledger", o.replay_ledger, "Recorded ledger for --provider replay");
  sample->add_option("--base-url", o.base_url, "OpenAI-compatible base URL")->capture_default_str();
  sample->add_option("--model", o.model, "Model id")->capture_default_str();
  sample->add_option("--max-inflight", o.max_inflight, "Concurrent requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sample->add_option("--retry-attempts", o.retry_attempts, "Attempts per request")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sample->add_option("--cot-template", o.cot_template, "Diagnosis prompt template")
      ->check(CLI::ExistingFile);
  sample->add_option("--confidence-template", o.confidence_template,
                     "Confidence prompt template")
      ->check(CLI::ExistingFile);

  auto* score = app.add_subcommand("score", "Per-case confidence signals from a ledger");
  score->add_option("--ledger", o.ledger, "Ledger")->required()->check(CLI::ExistingFile);
  score->add_option("--synonyms", o.synonyms, "Synonym map JSON");
  score->add_option("--cases", o.cases, "Corpus CSV (row order)")->check(CLI::ExistingFile);
  score->add_option("--out", o.out, "Output directory");
  score->add_option("--intrinsic-temperature", o.intrinsic_temperature, "Recorded for replay");
  score->add_flag("--intrinsic-per-run", o.intrinsic_per_run, "Average per-run confidences");

  auto* report = app.add_subcommand("report", "ROC/AUC, buckets and tests from a scores file");
  report->add_option("--scores", o.scores, "scores.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--grades", o.grades, "Grade CSV")->check(CLI::ExistingFile);
  report->add_flag("--auto-grade", o.auto_grade, "Grade against reference answers");
  report->add_option("--cases", o.cases, "Corpus CSV for --auto-grade")->check(CLI::ExistingFile);
  report->add_option("--synonyms", o.synonyms, "Synonym map JSON for --auto-grade");
  report->add_option("--ledger", o.ledger, "Ledger, for the config echo")
      ->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "Output directory")->required();
  report->add_option("--seed", o.seed, "Bootstrap seed")->capture_default_str();
  report->add_option("--resamples", o.resamples, "Bootstrap resamples")->capture_default_str();
  report->add_option("--runs", o.runs, "Runs per case when no ledger is given")
      ->capture_default_str();
  report->add_option("--temperature", o.temperature, "Temperature when no ledger is given")
      ->capture_default_str();

  auto* fixture = app.add_subcommand("fixture", "Write the seeded synthetic fixture");
  fixture->add_option("--out", o.out, "Output directory")->required();
  fixture->add_option("--seed", o.seed, "Seed")->capture_default_str();

  auto* suggest = app.add_subcommand("suggest", "List near-duplicate answer labels");
  suggest->add_option("--ledger", o.ledger, "Ledger")->required()->check(CLI::ExistingFile);
  suggest->add_option("--synonyms", o.synonyms, "Synonym map JSON");
  suggest->add_option("--max-distance", o.max_distance, "Edit distance")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) return run_sample(o);
    if (*score) return run_score(o);
    if (*report) return run_report(o);
    if (*fixture) return run_fixture(o);
    if (*suggest) return run_suggest(o);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
