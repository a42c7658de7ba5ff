#include "llmconf/sc_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>

#include "llmconf/errors.hpp"
#include "llmconf/io.hpp"

namespace llmconf {

void SamplingConfig::validate() const {
  if (runs_per_case < 1) throw ArgumentError("runs_per_case must be >= 1");
  sc_params().validate();
  intrinsic_params().validate();
}

SamplingParams SamplingConfig::sc_params() const {
  return {sc_temperature, max_output_tokens, model_id};
}

SamplingParams SamplingConfig::intrinsic_params() const {
  return {intrinsic_temperature, max_output_tokens, model_id};
}

std::string to_string(Correctness c) {
  switch (c) {
    case Correctness::kCorrect:
      return "correct";
    case Correctness::kIncorrect:
      return "incorrect";
    default:
      return "ungraded";
  }
}

Correctness correctness_from_string(const std::string& s) {
  if (s == "correct") return Correctness::kCorrect;
  if (s == "incorrect") return Correctness::kIncorrect;
  if (s == "ungraded" || s.empty()) return Correctness::kUngraded;
  throw ArgumentError("unknown correctness '" + s + "'");
}

namespace {

RunRecord sample_one(const RunKey& key, const std::string& prompt, const SamplingConfig& cfg,
                     Provider& provider) {
  const SamplingParams params = cfg.sc_params();
  Completion completion;
  try {
    completion = provider.complete(prompt, params, key);
  } catch (const ProviderError&) {
    return make_failed_record(key, cfg.model_id, params.temperature);
  }
  try {
    std::string dx = parse_diagnosis(completion.text);
    return make_ok_record(key, std::move(completion.text), std::move(dx), cfg.model_id,
                          params.temperature);
  } catch (const ExtractionError&) {
    RunRecord r = make_ok_record(key, std::move(completion.text), "", cfg.model_id,
                                 params.temperature);
    r.status = RunStatus::kFailed;
    return r;
  }
}

}  // namespace

std::vector<RunRecord> run_self_consistency(const ClinicalCase& c, const SamplingConfig& cfg,
                                            Provider& provider, const PromptTemplate& tmpl,
                                            const RunLedger* existing) {
  cfg.validate();
  const std::string prompt = render_cot_prompt(c, tmpl);

  std::vector<RunRecord> out(static_cast<std::size_t>(cfg.runs_per_case));
  std::vector<std::pair<int, std::future<RunRecord>>> pending;
  for (int i = 0; i < cfg.runs_per_case; ++i) {
    const RunKey key{c.case_id, Purpose::kSelfConsistency, i};
    if (existing != nullptr) {
      if (const RunRecord* r = existing->find(key)) {
        out[static_cast<std::size_t>(i)] = *r;
        continue;
      }
    }
    pending.emplace_back(i, std::async(std::launch::async, [&, key] {
                           return sample_one(key, prompt, cfg, provider);
                         }));
  }
  for (auto& [i, fut] : pending) out[static_cast<std::size_t>(i)] = fut.get();

  if (std::none_of(out.begin(), out.end(), [](const RunRecord& r) { return r.ok(); })) {
    throw CaseFailedError("all " + std::to_string(cfg.runs_per_case) + " runs failed for case " +
                          c.case_id);
  }
  return out;
}

ModalAnswer agreement_frequency(const GroupAssignment& assignment) {
  if (assignment.counts.empty() || assignment.usable() == 0) {
    throw EmptyCaseError("empty group assignment");
  }
  ModalAnswer best;
  // std::map iterates labels in ascending order, so the first maximum wins ties.
  for (const auto& [label, count] : assignment.counts) {
    if (count > best.count) {
      best.label = label;
      best.count = count;
    }
  }
  best.frequency = static_cast<double>(best.count) / static_cast<double>(assignment.usable());
  return best;
}

IntrinsicOutcome elicit_intrinsic_confidence(const ClinicalCase& c, const std::string& diagnosis,
                                             const SamplingConfig& cfg, Provider& provider,
                                             const PromptTemplate& tmpl, int slot,
                                             const RunLedger* existing) {
  const std::string prompt = render_intrinsic_prompt(diagnosis, c, tmpl);
  const SamplingParams params = cfg.intrinsic_params();
  IntrinsicOutcome out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const RunKey key{c.case_id, Purpose::kIntrinsic, 2 * slot + attempt};
    RunRecord rec;
    if (const RunRecord* prior = existing ? existing->find(key) : nullptr) {
      rec = *prior;
    } else {
      try {
        Completion completion = provider.complete(prompt, params, key);
        rec = make_ok_record(key, std::move(completion.text), "", cfg.model_id,
                             params.temperature);
      } catch (const ProviderError&) {
        rec = make_failed_record(key, cfg.model_id, params.temperature);
      }
      if (rec.ok()) {
        try {
          rec.extracted_answer = format_real(parse_confidence(rec.response_text));
        } catch (const ExtractionError&) {
          rec.status = RunStatus::kFailed;
        }
      }
    }
    out.records.push_back(rec);
    if (rec.ok()) {
      try {
        out.confidence = parse_confidence(rec.response_text);
        break;
      } catch (const ExtractionError&) {
      }
    }
  }
  return out;
}

double mean_response_length(std::span<const RunRecord> runs) {
  double total = 0.0;
  int n = 0;
  for (const auto& r : runs) {
    if (!r.ok()) continue;
    total += static_cast<double>(r.char_count);
    ++n;
  }
  if (n == 0) throw EmptyCaseError("no ok runs to average");
  return total / n;
}

ScoredCase score_case(const ClinicalCase& c, std::span<const RunRecord> runs,
                      const GroupingMap& map, const SamplingConfig& cfg, Provider& provider,
                      const PromptTemplate& confidence_tmpl, const RunLedger* existing) {
  std::vector<RunRecord> sc_runs;
  for (const auto& r : runs) {
    if (r.purpose == Purpose::kSelfConsistency) sc_runs.push_back(r);
  }
  if (sc_runs.empty()) throw EmptyCaseError("no self-consistency runs for case " + c.case_id);
  if (std::none_of(sc_runs.begin(), sc_runs.end(), [](const RunRecord& r) { return r.ok(); })) {
    throw CaseFailedError("all runs failed for case " + c.case_id);
  }

  ScoredCase out;
  out.assignment = group_runs(sc_runs, map);
  const ModalAnswer modal = agreement_frequency(out.assignment);

  CaseScores& s = out.scores;
  s.case_id = c.case_id;
  s.modal_answer = modal.label;
  s.modal_count = modal.count;
  s.usable_runs = out.assignment.usable();
  s.sc_agreement_frequency = modal.frequency;
  s.mean_cot_length = mean_response_length(sc_runs);

  if (cfg.intrinsic_per_run) {
    double total = 0.0;
    int n = 0;
    for (const auto& m : out.assignment.members) {
      auto r = elicit_intrinsic_confidence(c, m.diagnosis, cfg, provider, confidence_tmpl,
                                           m.run_index, existing);
      out.intrinsic_records.insert(out.intrinsic_records.end(), r.records.begin(),
                                   r.records.end());
      if (r.confidence) {
        total += *r.confidence;
        ++n;
      }
    }
    if (n > 0) s.intrinsic_confidence = total / n;
  } else {
    const auto it = std::find_if(out.assignment.members.begin(), out.assignment.members.end(),
                                 [&](const auto& m) { return m.label == modal.label; });
    auto r = elicit_intrinsic_confidence(c, it->diagnosis, cfg, provider, confidence_tmpl, 0,
                                         existing);
    out.intrinsic_records = std::move(r.records);
    s.intrinsic_confidence = r.confidence;
  }
  return out;
}

// ---- scores file ----------------------------------------------------------------

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_real(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("not a number: '" + s + "'", line);
  }
  return v;
}

}  // namespace

std::string serialize_scores(std::span<const CaseScores> scores) {
  std::string out = io::csv_line({"case_id", "modal_answer", "sc_frequency",
                                  "intrinsic_confidence", "mean_cot_length", "usable_runs",
                                  "correct"});
  for (const auto& s : scores) {
    out += io::csv_line(
        {s.case_id, s.modal_answer, format_real(s.sc_agreement_frequency),
         s.intrinsic_confidence ? format_real(*s.intrinsic_confidence) : std::string(),
         format_real(s.mean_cot_length), std::to_string(s.usable_runs), to_string(s.correct)});
  }
  return out;
}

std::vector<CaseScores> parse_scores(const std::string& text) {
  const auto rows = io::parse_csv(text);
  const std::vector<std::string> header{"case_id",         "modal_answer", "sc_frequency",
                                        "intrinsic_confidence", "mean_cot_length",
                                        "usable_runs",     "correct"};
  if (rows.empty() || rows.front().fields != header) {
    throw ParseError("scores file has an unexpected header", 1);
  }
  std::vector<CaseScores> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    if (row.fields.size() != header.size()) {
      throw ParseError("expected 7 fields", row.line);
    }
    CaseScores s;
    s.case_id = row.fields[0];
    s.modal_answer = row.fields[1];
    s.sc_agreement_frequency = parse_real(row.fields[2], row.line);
    if (!row.fields[3].empty()) s.intrinsic_confidence = parse_real(row.fields[3], row.line);
    s.mean_cot_length = parse_real(row.fields[4], row.line);
    s.usable_runs = static_cast<int>(parse_real(row.fields[5], row.line));
    if (s.usable_runs < 1) throw ParseError("usable_runs must be >= 1", row.line);
    s.modal_count =
        static_cast<int>(std::lround(s.sc_agreement_frequency * s.usable_runs));
    try {
      s.correct = correctness_from_string(row.fields[6]);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), row.line);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CaseScores> load_scores(const std::filesystem::path& path) {
  return parse_scores(io::read_file(path));
}

}  // namespace llmconf
