#include "llmconf/case_store.hpp"

#include <json.hpp>

#include <limits>
#include <set>
#include <sstream>

#include "llmconf/errors.hpp"
#include "llmconf/io.hpp"

namespace llmconf {

using ojson = nlohmann::ordered_json;

std::string to_string(RunStatus s) { return s == RunStatus::kOk ? "ok" : "failed"; }

std::string to_string(Purpose p) {
  return p == Purpose::kSelfConsistency ? "sc" : "intrinsic";
}

Purpose purpose_from_string(const std::string& s) {
  if (s == "sc") return Purpose::kSelfConsistency;
  if (s == "intrinsic") return Purpose::kIntrinsic;
  throw ArgumentError("unknown purpose '" + s + "'");
}

std::string RunKey::str() const {
  return "(" + case_id + ", " + std::to_string(run_index) + ", " + to_string(purpose) + ")";
}

RunRecord make_ok_record(RunKey key, std::string response_text,
                         std::string extracted_answer, std::string model_id,
                         double temperature) {
  RunRecord r;
  r.case_id = std::move(key.case_id);
  r.purpose = key.purpose;
  r.run_index = key.run_index;
  r.char_count = static_cast<std::int64_t>(io::utf8_length(response_text));
  r.response_text = std::move(response_text);
  r.extracted_answer = std::move(extracted_answer);
  r.model_id = std::move(model_id);
  r.temperature = temperature;
  r.status = RunStatus::kOk;
  return r;
}

RunRecord make_failed_record(RunKey key, std::string model_id, double temperature) {
  RunRecord r;
  r.case_id = std::move(key.case_id);
  r.purpose = key.purpose;
  r.run_index = key.run_index;
  r.model_id = std::move(model_id);
  r.temperature = temperature;
  r.status = RunStatus::kFailed;
  return r;
}

// ---- RunLedger -------------------------------------------------------------

const RunRecord* RunLedger::find(const RunKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::vector<RunRecord> RunLedger::runs_for(const std::string& case_id,
                                           Purpose purpose) const {
  std::vector<RunRecord> out;
  auto it = index_.lower_bound(RunKey{case_id, purpose, std::numeric_limits<int>::min()});
  for (; it != index_.end() && it->first.case_id == case_id && it->first.purpose == purpose;
       ++it) {
    out.push_back(records_[it->second]);
  }
  return out;
}

std::vector<std::string> RunLedger::case_ids() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records_) {
    if (seen.insert(r.case_id).second) out.push_back(r.case_id);
  }
  return out;
}

void RunLedger::append(std::span<const RunRecord> runs) {
  std::set<RunKey> incoming;
  for (const auto& r : runs) {
    auto key = r.key();
    if (index_.contains(key) || !incoming.insert(key).second) {
      throw ConflictError("run " + key.str() + " already present in ledger");
    }
  }
  for (const auto& r : runs) {
    index_.emplace(r.key(), records_.size());
    records_.push_back(r);
  }
}

RunLedger append_runs(const RunLedger& ledger, std::span<const RunRecord> runs) {
  RunLedger out = ledger;
  out.append(runs);
  return out;
}

// ---- JSON lines --------------------------------------------------------------

std::string header_to_json_line(const LedgerHeader& h) {
  ojson j;
  j["corpus_sha256"] = h.corpus_sha256;
  j["runs_per_case"] = h.runs_per_case;
  j["temperature"] = h.temperature;
  j["model_id"] = h.model_id;
  return j.dump() + "\n";
}

std::string record_to_json_line(const RunRecord& r) {
  ojson j;
  j["case_id"] = r.case_id;
  j["purpose"] = to_string(r.purpose);
  j["run_index"] = r.run_index;
  j["status"] = to_string(r.status);
  j["model_id"] = r.model_id;
  j["temperature"] = r.temperature;
  j["char_count"] = r.char_count;
  j["extracted_answer"] = r.extracted_answer;
  j["response_text"] = r.response_text;
  return j.dump() + "\n";
}

std::string serialize_ledger(const RunLedger& ledger) {
  std::string out = header_to_json_line(ledger.header());
  for (const auto& r : ledger.records()) out += record_to_json_line(r);
  return out;
}

namespace {

LedgerHeader header_from_json(const nlohmann::json& j, std::size_t line) {
  try {
    LedgerHeader h;
    h.corpus_sha256 = j.at("corpus_sha256").get<std::string>();
    h.runs_per_case = j.at("runs_per_case").get<int>();
    h.temperature = j.at("temperature").get<double>();
    h.model_id = j.at("model_id").get<std::string>();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad ledger header: ") + e.what(), line);
  }
}

RunRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  RunRecord r;
  try {
    r.case_id = j.at("case_id").get<std::string>();
    r.purpose = purpose_from_string(j.value("purpose", std::string("sc")));
    r.run_index = j.at("run_index").get<int>();
    const auto status = j.at("status").get<std::string>();
    if (status == "ok") {
      r.status = RunStatus::kOk;
    } else if (status == "failed") {
      r.status = RunStatus::kFailed;
    } else {
      throw ParseError("unknown status '" + status + "'", line);
    }
    r.model_id = j.at("model_id").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.char_count = j.at("char_count").get<std::int64_t>();
    r.extracted_answer = j.value("extracted_answer", std::string());
    r.response_text = j.at("response_text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad run record: ") + e.what(), line);
  } catch (const ArgumentError& e) {
    throw ParseError(e.what(), line);
  }
  if (r.run_index < 0) throw ParseError("negative run_index", line);
  if (r.char_count < 0) throw ParseError("negative char_count", line);
  if (r.ok() &&
      r.char_count != static_cast<std::int64_t>(io::utf8_length(r.response_text))) {
    throw ParseError("char_count does not match response_text length", line);
  }
  return r;
}

}  // namespace

RunLedger parse_ledger(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<RunLedger> ledger;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!ledger) {
      ledger.emplace(header_from_json(j, line_no));
      continue;
    }
    auto record = record_from_json(j, line_no);
    try {
      ledger->append(std::span<const RunRecord>(&record, 1));
    } catch (const ConflictError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!ledger) throw ParseError("ledger has no header line", 1);
  return std::move(*ledger);
}

RunLedger load_ledger(const std::filesystem::path& path) {
  return parse_ledger(io::read_file(path));
}

void save_ledger(const std::filesystem::path& path, const RunLedger& ledger) {
  io::write_file_atomic(path, serialize_ledger(ledger));
}

// ---- LedgerWriter ------------------------------------------------------------

LedgerWriter::LedgerWriter(std::filesystem::path path, const LedgerHeader& header)
    : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    // Drop a torn final line left by an interrupted append.
    const std::string bytes = io::read_file(path_);
    if (!bytes.empty() && bytes.back() != '\n') {
      const auto last_newline = bytes.rfind('\n');
      if (last_newline == std::string::npos) {
        std::filesystem::remove(path_);
      } else {
        std::filesystem::resize_file(path_, last_newline + 1);
      }
    }
  }
  if (std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0) {
    ledger_ = load_ledger(path_);
    if (!(ledger_.header() == header)) {
      throw ConflictError("ledger " + path_.string() +
                          " was written with a different corpus or sampling config");
    }
  } else {
    ledger_ = RunLedger(header);
    io::write_file_atomic(path_, header_to_json_line(header));
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error("cannot append to " + path_.string());
}

void LedgerWriter::append(std::span<const RunRecord> runs) {
  std::lock_guard lock(mu_);
  ledger_.append(runs);
  for (const auto& r : runs) {
    out_ << record_to_json_line(r);
    out_.flush();
  }
  if (!out_) throw Error("write failed for " + path_.string());
}

// ---- corpus --------------------------------------------------------------------

namespace {

bool blank_row(const io::CsvRow& row) {
  return row.fields.size() == 1 && row.fields[0].empty();
}

void expect_header(const std::vector<io::CsvRow>& rows,
                   const std::vector<std::string>& expected, const char* what) {
  if (rows.empty() || rows.front().fields != expected) {
    std::string want;
    for (const auto& f : expected) want += (want.empty() ? "" : ",") + f;
    throw ParseError(std::string(what) + " header must be '" + want + "'", 1);
  }
}

}  // namespace

std::vector<ClinicalCase> parse_corpus(const std::string& text) {
  const auto rows = io::parse_csv(text);
  expect_header(rows, {"case_id", "source_ref", "case_text", "reference_answer"}, "corpus");
  std::vector<ClinicalCase> cases;
  std::set<std::string> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (blank_row(row)) continue;
    if (row.fields.size() != 4) {
      throw ParseError("expected 4 fields, found " + std::to_string(row.fields.size()),
                       row.line);
    }
    ClinicalCase c{row.fields[0], row.fields[1], row.fields[2], row.fields[3]};
    if (c.case_id.empty()) throw ParseError("empty case_id", row.line);
    if (c.case_text.empty()) throw ParseError("empty case_text for " + c.case_id, row.line);
    if (c.reference_answer.empty()) {
      throw ParseError("empty reference_answer for " + c.case_id, row.line);
    }
    if (!ids.insert(c.case_id).second) {
      throw ConflictError("duplicate case_id \"" + c.case_id + "\" (line " +
                          std::to_string(row.line) + ")");
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<ClinicalCase> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(io::read_file(path));
}

std::string serialize_corpus(std::span<const ClinicalCase> cases) {
  std::string out = io::csv_line({"case_id", "source_ref", "case_text", "reference_answer"});
  for (const auto& c : cases) {
    out += io::csv_line({c.case_id, c.source_ref, c.case_text, c.reference_answer});
  }
  return out;
}

void save_corpus(const std::filesystem::path& path, std::span<const ClinicalCase> cases) {
  io::write_file_atomic(path, serialize_corpus(cases));
}

// ---- grades --------------------------------------------------------------------

std::string to_string(Grade g) { return g == Grade::kCorrect ? "correct" : "incorrect"; }

const GradeEntry* GradeFile::find(const std::string& case_id) const {
  for (const auto& e : entries) {
    if (e.case_id == case_id) return &e;
  }
  return nullptr;
}

namespace {

Grade parse_grade(const std::string& s, std::size_t line) {
  if (s == "correct") return Grade::kCorrect;
  if (s == "incorrect") return Grade::kIncorrect;
  throw ParseError("grade must be 'correct' or 'incorrect', got '" + s + "'", line);
}

}  // namespace

GradeFile parse_grades(const std::string& text) {
  const auto rows = io::parse_csv(text);
  expect_header(rows, {"case_id", "grader_1", "grader_2", "grader_3"}, "grade file");
  GradeFile out;
  std::set<std::string> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (blank_row(row)) continue;
    if (row.fields.size() != 4) {
      throw ParseError("expected 4 fields, found " + std::to_string(row.fields.size()),
                       row.line);
    }
    GradeEntry e;
    e.case_id = row.fields[0];
    if (e.case_id.empty()) throw ParseError("empty case_id", row.line);
    e.grader_1 = parse_grade(row.fields[1], row.line);
    e.grader_2 = parse_grade(row.fields[2], row.line);
    if (!row.fields[3].empty()) e.grader_3 = parse_grade(row.fields[3], row.line);
    if (e.grader_1 != e.grader_2 && !e.grader_3) {
      throw AdjudicationRequired("graders disagree on " + e.case_id +
                                 " and no third grade is present (line " +
                                 std::to_string(row.line) + ")");
    }
    if (!ids.insert(e.case_id).second) {
      throw ConflictError("duplicate grade row for \"" + e.case_id + "\"");
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

GradeFile load_grades(const std::filesystem::path& path) {
  return parse_grades(io::read_file(path));
}

std::string serialize_grades(const GradeFile& grades) {
  std::string out = io::csv_line({"case_id", "grader_1", "grader_2", "grader_3"});
  for (const auto& e : grades.entries) {
    out += io::csv_line({e.case_id, to_string(e.grader_1), to_string(e.grader_2),
                         e.grader_3 ? to_string(*e.grader_3) : std::string()});
  }
  return out;
}

void save_grades(const std::filesystem::path& path, const GradeFile& grades) {
  io::write_file_atomic(path, serialize_grades(grades));
}

}  // namespace llmconf
