#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "llmconf/errors.hpp"
#include "llmconf/grouping.hpp"
#include "test_support.hpp"

using namespace llmconf;
using testsupport::sc;

namespace {

GroupingMap lyme_map() {
  GroupingMap map;
  map.add("lyme carditis", {"lyme disease induced heart block", "lyme disease induced carditis"});
  return map;
}

std::vector<RunRecord> runs_from(const std::vector<std::string>& answers) {
  std::vector<RunRecord> runs;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const RunKey key = sc("c1", static_cast<int>(i));
    if (answers[i].empty()) {
      runs.push_back(make_failed_record(key, "m", 1.0));
    } else {
      runs.push_back(make_ok_record(key, "...\nDiagnosis: " + answers[i], answers[i], "m", 1.0));
    }
  }
  return runs;
}

// Random diagnosis-like strings drawn from pieces that exercise case,
// accents in both normal forms, apostrophes, punctuation and articles.
std::string random_diagnosis(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "Behçet",     "Behc\xCC\xA7" "et",  "’s",   "'s", " disease", "The ", "a ",   "An ",
      "SJÖGREN",    "sjo\xCC\x88gren",    "-",    ".",  ",",        "  ",   "\t",   "(",
      ")",          " is the most likely diagnosis", "Lyme", "carditis", "!", "ﬁ", "İ", "ß",
      "type II",    "µ",                  "\xE2\x80\x93"};
  std::string s;
  const auto n = 1 + rng() % 8;
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

}  // namespace

TEST(Normalize, DocumentedExamples) {
  EXPECT_EQ(normalize("  Behcet's Disease. "), "behcets disease");
  EXPECT_EQ(normalize("The Lyme disease-induced carditis"), "lyme disease induced carditis");
  EXPECT_THROW(normalize("!!!"), NormalizationError);
  EXPECT_THROW(normalize(""), NormalizationError);
}

TEST(Normalize, UnicodeFormsAndApostrophesAgree) {
  EXPECT_EQ(normalize("Behçet’s disease"), normalize("BEHC\xCC\xA7" "ET'S DISEASE"));
  EXPECT_EQ(normalize("Kikuchi–Fujimoto disease"), "kikuchi fujimoto disease");
  EXPECT_EQ(normalize("Sjögren syndrome"), normalize("sjo\xCC\x88gren  syndrome"));
}

TEST(Normalize, DropsArticlesAndLikelihoodFraming) {
  EXPECT_EQ(normalize("A Pompe disease"), "pompe disease");
  EXPECT_EQ(normalize("an acute abscess"), "acute abscess");
  EXPECT_EQ(normalize("Behcets disease is the most likely diagnosis."), "behcets disease");
  EXPECT_EQ(normalize("The infant botulism is the most likely diagnosis"), "infant botulism");
  // Only whole leading words count as articles.
  EXPECT_EQ(normalize("Theophylline toxicity"), "theophylline toxicity");
  EXPECT_EQ(normalize("Anaplasmosis"), "anaplasmosis");
}

TEST(Normalize, IdempotentOnRandomStrings) {
  std::mt19937_64 rng(2024);
  int normalized = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_diagnosis(rng);
    try {
      const auto once = normalize(s);
      EXPECT_EQ(normalize(once), once) << s;
      ++normalized;
    } catch (const NormalizationError&) {
    }
  }
  EXPECT_GT(normalized, 800);
}

TEST(AssignGroup, SynonymVariantsShareCanonicalLabel) {
  const auto map = lyme_map();
  EXPECT_EQ(assign_group("lyme disease-induced heart block", map), "lyme carditis");
  EXPECT_EQ(assign_group("lyme disease-induced carditis", map), "lyme carditis");
  EXPECT_EQ(assign_group("Lyme Carditis.", map), "lyme carditis");
}

TEST(AssignGroup, UnmappedIsNormalizedSingleton) {
  EXPECT_EQ(assign_group("acid maltase deficiency", GroupingMap{}), "acid maltase deficiency");
  EXPECT_EQ(assign_group("Acid Maltase Deficiency", lyme_map()), "acid maltase deficiency");
}

TEST(AssignGroup, PropagatesNormalizationError) {
  EXPECT_THROW(assign_group("...", lyme_map()), NormalizationError);
}

TEST(GroupingMap, EveryVariantMapsToItsLabel) {
  const auto map = parse_grouping_map(R"({
    "Lyme carditis": ["lyme disease-induced heart block", "Lyme disease–induced carditis"],
    "Acid maltase deficiency": ["Pompe disease", "glycogen storage disease type II"]
  })");
  for (const auto& [label, variants] : map.entries()) {
    EXPECT_TRUE(variants.contains(label));
    for (const auto& v : variants) EXPECT_EQ(assign_group(v, map), label);
  }
  EXPECT_EQ(assign_group("POMPE DISEASE", map), "acid maltase deficiency");
}

TEST(GroupingMap, CrossLabelDuplicateRejected) {
  EXPECT_THROW(parse_grouping_map(R"({"a b": ["x"], "c": ["X."]})"), ValidationError);
  EXPECT_THROW(parse_grouping_map(R"({"a": ["b"], "b": []})"), ValidationError);
}

TEST(GroupingMap, MalformedJsonRejected) {
  EXPECT_THROW(parse_grouping_map("[1, 2]"), ParseError);
  EXPECT_THROW(parse_grouping_map(R"({"a": "b"})"), ParseError);
  EXPECT_THROW(parse_grouping_map("{"), ParseError);
}

TEST(GroupingMap, SerializeRoundTrips) {
  const auto map = lyme_map();
  EXPECT_EQ(parse_grouping_map(serialize_grouping_map(map)).entries(), map.entries());
}

TEST(GroupRuns, EightVariantsPlusThreeOthers) {
  const auto map = lyme_map();
  const auto a = group_runs(runs_from({"Lyme carditis", "lyme disease-induced heart block",
                                       "Lyme disease-induced carditis", "lyme carditis.",
                                       "The Lyme carditis", "LYME CARDITIS",
                                       "Lyme disease induced heart block", "lyme carditis",
                                       "Sarcoidosis", "Giant cell myocarditis", "Viral myocarditis"}),
                            map);
  const std::map<std::string, int> expected = {{"lyme carditis", 8},
                                               {"sarcoidosis", 1},
                                               {"giant cell myocarditis", 1},
                                               {"viral myocarditis", 1}};
  EXPECT_EQ(a.counts, expected);
  EXPECT_EQ(a.usable(), 11);
  EXPECT_EQ(a.excluded_count, 0);
}

TEST(GroupRuns, ElevenIdenticalIsOneGroup) {
  const auto a = group_runs(runs_from(std::vector<std::string>(11, "Whipple disease")), {});
  EXPECT_EQ(a.counts, (std::map<std::string, int>{{"whipple disease", 11}}));
}

TEST(GroupRuns, FailedRunsExcludedAndCounted) {
  std::vector<std::string> answers(11, "Whipple disease");
  answers[2] = answers[9] = "";
  const auto a = group_runs(runs_from(answers), {});
  EXPECT_EQ(a.counts.at("whipple disease"), 9);
  EXPECT_EQ(a.excluded_count, 2);
  for (const auto& m : a.members) EXPECT_NE(m.run_index, 2);
}

TEST(GroupRuns, NoUsableRunIsEmptyCase) {
  EXPECT_THROW(group_runs(runs_from({"", "", ""}), {}), EmptyCaseError);
  EXPECT_THROW(group_runs(runs_from({"!!!"}), {}), EmptyCaseError);
}

TEST(GroupRuns, PartitionAndPermutationStability) {
  std::mt19937_64 rng(99);
  const auto map = lyme_map();
  const std::vector<std::string> pool = {"Lyme carditis", "lyme disease-induced heart block",
                                         "Sarcoidosis", "sarcoidosis.", "", "???", "Whipple"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> answers;
    const int n = 1 + static_cast<int>(rng() % 11);
    for (int i = 0; i < n; ++i) answers.push_back(pool[rng() % pool.size()]);
    if (std::all_of(answers.begin(), answers.end(),
                    [](const std::string& s) { return s.empty() || s == "???"; })) {
      answers.push_back("Whipple");
    }
    const auto a = group_runs(runs_from(answers), map);
    int total = 0;
    for (const auto& [label, count] : a.counts) total += count;
    EXPECT_EQ(total, a.usable());
    EXPECT_EQ(a.usable() + a.excluded_count, static_cast<int>(answers.size()));
    std::set<int> seen;
    for (const auto& m : a.members) EXPECT_TRUE(seen.insert(m.run_index).second);

    std::shuffle(answers.begin(), answers.end(), rng);
    EXPECT_EQ(group_runs(runs_from(answers), map).counts, a.counts);
  }
}

TEST(Suggest, EditDistanceOnCodePoints) {
  EXPECT_EQ(edit_distance("behcet", "behçet"), 1);
  EXPECT_EQ(edit_distance("", "abc"), 3);
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3);
}

TEST(Suggest, NearLabelsListedNeverMerged) {
  const std::vector<std::string> labels = {"behcets disease", "behcet disease", "lyme carditis"};
  const auto s = suggest_merges(labels, 2);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].distance, 1);
  EXPECT_EQ(assign_group("behcets disease", GroupingMap{}), "behcets disease");
}
