#pragma once

// Deciding when two free-text answers are the same answer.

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "llmconf/case_store.hpp"

namespace llmconf {

// Lowercase, NFC, apostrophes removed, other punctuation to spaces,
// whitespace collapsed and trimmed, leading articles dropped, and a trailing
// "is the most likely diagnosis" framing removed. Throws NormalizationError
// when nothing is left.
std::string normalize(std::string_view diagnosis);

// Canonical label -> accepted variants, all stored normalized.
class GroupingMap {
 public:
  GroupingMap() = default;

  // Variants are normalized on insertion; the canonical label is always its
  // own variant. Throws ValidationError if a variant already belongs to a
  // different label.
  void add(std::string_view canonical, const std::vector<std::string>& variants);

  // Canonical label for a normalized string, or nullptr when unmapped.
  const std::string* lookup(const std::string& normalized) const;

  const std::map<std::string, std::set<std::string>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, std::set<std::string>> entries_;
  std::map<std::string, std::string> variant_to_label_;
};

// `{canonical: [variant, ...]}`.
GroupingMap parse_grouping_map(const std::string& json_text);
GroupingMap load_grouping_map(const std::filesystem::path& path);
std::string serialize_grouping_map(const GroupingMap& map);

std::string assign_group(std::string_view diagnosis, const GroupingMap& map);

struct GroupAssignment {
  struct Member {
    int run_index = 0;
    std::string label;
    std::string diagnosis;  // extracted answer as parsed
  };
  std::vector<Member> members;           // ordered by run_index
  std::map<std::string, int> counts;     // label -> member count
  int excluded_count = 0;                // failed or unparseable runs

  int usable() const { return static_cast<int>(members.size()); }
};

// Groups the ok self-consistency runs of one case. Throws EmptyCaseError when
// no run is usable.
GroupAssignment group_runs(std::span<const RunRecord> runs, const GroupingMap& map);

struct MergeSuggestion {
  std::string a;
  std::string b;
  int distance = 0;
};

// Pairs of distinct labels within `max_distance` edits of each other, for
// human review. Never applied automatically.
std::vector<MergeSuggestion> suggest_merges(const std::vector<std::string>& labels,
                                            int max_distance);

int edit_distance(std::string_view a, std::string_view b);

}  // namespace llmconf
