#include "llmconf/grouping.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <json.hpp>

#include <algorithm>

#include "llmconf/errors.hpp"
#include "llmconf/io.hpp"

namespace llmconf {

namespace {

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFC normalizer unavailable");
  return *n;
}

icu::UnicodeString to_nfc(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  if (U_FAILURE(status)) throw NormalizationError("NFC normalization failed");
  return out;
}

bool is_apostrophe(UChar32 c) {
  return c == 0x0027 || c == 0x2018 || c == 0x2019 || c == 0x02BC || c == 0x0060 ||
         c == 0x00B4 || c == 0xFF07;
}

bool starts_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(0, p.size()) == p;
}

bool ends_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

// Removes leading articles and the trailing "is the most likely diagnosis"
// framing until neither applies.
std::string strip_framing(std::string s) {
  static constexpr std::string_view kArticles[] = {"a ", "an ", "the "};
  static constexpr std::string_view kSuffixes[] = {
      " is the most likely diagnosis", " is the most likely", " is most likely"};
  for (bool changed = true; changed;) {
    changed = false;
    for (auto a : kArticles) {
      if (s.size() > a.size() && starts_with(s, a)) {
        s.erase(0, a.size());
        changed = true;
      }
    }
    for (auto suffix : kSuffixes) {
      if (s.size() > suffix.size() && ends_with(s, suffix)) {
        s.erase(s.size() - suffix.size());
        changed = true;
      }
    }
  }
  return s;
}

std::u32string decode_utf8(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  std::u32string out;
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    out.push_back(static_cast<char32_t>(c));
    i += U16_LENGTH(c);
  }
  return out;
}

}  // namespace

std::string normalize(std::string_view diagnosis) {
  icu::UnicodeString text = to_nfc(icu::UnicodeString::fromUTF8(
      icu::StringPiece(diagnosis.data(), static_cast<int32_t>(diagnosis.size()))));
  text.toLower(icu::Locale::getRoot());

  icu::UnicodeString cleaned;
  bool pending_space = false;
  for (int32_t i = 0; i < text.length();) {
    const UChar32 c = text.char32At(i);
    i += U16_LENGTH(c);
    if (is_apostrophe(c)) continue;
    if (u_ispunct(c) || u_isUWhiteSpace(c) || u_iscntrl(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !cleaned.isEmpty()) cleaned.append(static_cast<UChar>(0x20));
    pending_space = false;
    cleaned.append(c);
  }

  std::string out;
  to_nfc(cleaned).toUTF8String(out);
  out = strip_framing(std::move(out));
  if (out.empty()) {
    throw NormalizationError("diagnosis \"" + std::string(diagnosis) +
                             "\" is empty after normalization");
  }
  return out;
}

// ---- GroupingMap ----------------------------------------------------------------

void GroupingMap::add(std::string_view canonical, const std::vector<std::string>& variants) {
  const std::string label = normalize(canonical);
  std::set<std::string> normalized{label};
  for (const auto& v : variants) normalized.insert(normalize(v));
  for (const auto& v : normalized) {
    auto it = variant_to_label_.find(v);
    if (it != variant_to_label_.end() && it->second != label) {
      throw ValidationError("variant \"" + v + "\" is listed under both \"" + it->second +
                            "\" and \"" + label + "\"");
    }
  }
  for (const auto& v : normalized) variant_to_label_[v] = label;
  entries_[label].insert(normalized.begin(), normalized.end());
}

const std::string* GroupingMap::lookup(const std::string& normalized) const {
  auto it = variant_to_label_.find(normalized);
  return it == variant_to_label_.end() ? nullptr : &it->second;
}

GroupingMap parse_grouping_map(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("synonym map is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("synonym map must be a JSON object");
  GroupingMap map;
  for (const auto& [label, variants] : j.items()) {
    if (!variants.is_array()) {
      throw ParseError("variants of \"" + label + "\" must be an array");
    }
    std::vector<std::string> vs;
    for (const auto& v : variants) {
      if (!v.is_string()) throw ParseError("variants of \"" + label + "\" must be strings");
      vs.push_back(v.get<std::string>());
    }
    map.add(label, vs);
  }
  return map;
}

GroupingMap load_grouping_map(const std::filesystem::path& path) {
  return parse_grouping_map(io::read_file(path));
}

std::string serialize_grouping_map(const GroupingMap& map) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [label, variants] : map.entries()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& v : variants) {
      if (v != label) arr.push_back(v);
    }
    j[label] = std::move(arr);
  }
  return j.dump(2) + "\n";
}

std::string assign_group(std::string_view diagnosis, const GroupingMap& map) {
  std::string n = normalize(diagnosis);
  if (const std::string* label = map.lookup(n)) return *label;
  return n;
}

GroupAssignment group_runs(std::span<const RunRecord> runs, const GroupingMap& map) {
  std::vector<const RunRecord*> ordered;
  for (const auto& r : runs) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const RunRecord* a, const RunRecord* b) { return a->run_index < b->run_index; });

  GroupAssignment out;
  for (const RunRecord* r : ordered) {
    if (!r->ok() || r->extracted_answer.empty()) {
      ++out.excluded_count;
      continue;
    }
    std::string label;
    try {
      label = assign_group(r->extracted_answer, map);
    } catch (const NormalizationError&) {
      ++out.excluded_count;
      continue;
    }
    ++out.counts[label];
    out.members.push_back({r->run_index, std::move(label), r->extracted_answer});
  }
  if (out.members.empty()) {
    throw EmptyCaseError(std::string("no usable runs") +
                         (runs.empty() ? "" : " for case " + runs.front().case_id));
  }
  return out;
}

// ---- merge suggestions --------------------------------------------------------

int edit_distance(std::string_view a, std::string_view b) {
  const std::u32string x = decode_utf8(a);
  const std::u32string y = decode_utf8(b);
  std::vector<int> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const int subst = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

std::vector<MergeSuggestion> suggest_merges(const std::vector<std::string>& labels,
                                            int max_distance) {
  std::set<std::string> unique(labels.begin(), labels.end());
  std::vector<std::string> sorted(unique.begin(), unique.end());
  std::vector<MergeSuggestion> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const int d = edit_distance(sorted[i], sorted[j]);
      if (d <= max_distance) out.push_back({sorted[i], sorted[j], d});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) {
    return l.distance < r.distance;
  });
  return out;
}

}  // namespace llmconf
