#pragma once

// Cases, run ledgers and grade files: the durable record of an experiment.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace llmconf {

struct ClinicalCase {
  std::string case_id;
  std::string source_ref;
  std::string case_text;
  std::string reference_answer;

  bool operator==(const ClinicalCase&) const = default;
};

enum class RunStatus { kOk, kFailed };

// What a completion was requested for. Self-consistency samples and the
// intrinsic-confidence elicitation share one ledger.
enum class Purpose { kSelfConsistency, kIntrinsic };

std::string to_string(RunStatus s);
std::string to_string(Purpose p);
Purpose purpose_from_string(const std::string& s);

struct RunKey {
  std::string case_id;
  Purpose purpose = Purpose::kSelfConsistency;
  int run_index = 0;

  auto operator<=>(const RunKey&) const = default;
  std::string str() const;
};

struct RunRecord {
  std::string case_id;
  Purpose purpose = Purpose::kSelfConsistency;
  int run_index = 0;
  std::string response_text;
  std::string extracted_answer;
  std::int64_t char_count = 0;
  std::string model_id;
  double temperature = 0.0;
  RunStatus status = RunStatus::kOk;

  RunKey key() const { return {case_id, purpose, run_index}; }
  bool ok() const { return status == RunStatus::kOk; }
  bool operator==(const RunRecord&) const = default;
};

// Builds an ok record with char_count filled from the text.
RunRecord make_ok_record(RunKey key, std::string response_text,
                         std::string extracted_answer, std::string model_id,
                         double temperature);
RunRecord make_failed_record(RunKey key, std::string model_id, double temperature);

struct LedgerHeader {
  std::string corpus_sha256;
  int runs_per_case = 11;
  double temperature = 1.0;
  std::string model_id;

  bool operator==(const LedgerHeader&) const = default;
};

// Append-only collection of run records in insertion order.
class RunLedger {
 public:
  RunLedger() = default;
  explicit RunLedger(LedgerHeader header) : header_(std::move(header)) {}

  const LedgerHeader& header() const { return header_; }
  const std::vector<RunRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool contains(const RunKey& key) const { return index_.contains(key); }
  const RunRecord* find(const RunKey& key) const;

  // All records for one case and purpose, ordered by run_index.
  std::vector<RunRecord> runs_for(const std::string& case_id, Purpose purpose) const;

  // Case ids in first-appearance order.
  std::vector<std::string> case_ids() const;

  // Throws ConflictError on a key collision; the ledger is unchanged then.
  void append(std::span<const RunRecord> runs);

  bool operator==(const RunLedger& other) const {
    return header_ == other.header_ && records_ == other.records_;
  }

 private:
  LedgerHeader header_;
  std::vector<RunRecord> records_;
  std::map<RunKey, std::size_t> index_;
};

RunLedger append_runs(const RunLedger& ledger, std::span<const RunRecord> runs);

// JSON-lines encoding. The first line is the header object.
std::string header_to_json_line(const LedgerHeader& header);
std::string record_to_json_line(const RunRecord& record);
std::string serialize_ledger(const RunLedger& ledger);
RunLedger parse_ledger(const std::string& text);
RunLedger load_ledger(const std::filesystem::path& path);
void save_ledger(const std::filesystem::path& path, const RunLedger& ledger);

// Appends records to a ledger file one line at a time, flushing after each
// record so an interrupted run leaves a valid prefix. Appends are serialized.
class LedgerWriter {
 public:
  // Opens `path`, creating it with `header` when absent. An existing file is
  // loaded and its header must match `header`.
  LedgerWriter(std::filesystem::path path, const LedgerHeader& header);

  const RunLedger& ledger() const { return ledger_; }
  void append(std::span<const RunRecord> runs);

 private:
  std::filesystem::path path_;
  RunLedger ledger_;
  std::ofstream out_;
  std::mutex mu_;
};

std::vector<ClinicalCase> parse_corpus(const std::string& text);
std::vector<ClinicalCase> load_corpus(const std::filesystem::path& path);
std::string serialize_corpus(std::span<const ClinicalCase> cases);
void save_corpus(const std::filesystem::path& path, std::span<const ClinicalCase> cases);

enum class Grade { kCorrect, kIncorrect };
std::string to_string(Grade g);

struct GradeEntry {
  std::string case_id;
  Grade grader_1 = Grade::kCorrect;
  Grade grader_2 = Grade::kCorrect;
  std::optional<Grade> grader_3;

  bool operator==(const GradeEntry&) const = default;
};

struct GradeFile {
  std::vector<GradeEntry> entries;

  const GradeEntry* find(const std::string& case_id) const;
  bool operator==(const GradeFile&) const = default;
};

GradeFile parse_grades(const std::string& text);
GradeFile load_grades(const std::filesystem::path& path);
std::string serialize_grades(const GradeFile& grades);
void save_grades(const std::filesystem::path& path, const GradeFile& grades);

}  // namespace llmconf
