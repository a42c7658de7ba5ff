#include <gtest/gtest.h>

#include "llmconf/errors.hpp"
#include "llmconf/fixture.hpp"
#include "llmconf/io.hpp"
#include "test_support.hpp"

using namespace llmconf;

namespace {
const std::filesystem::path kFixture = LLMCONF_FIXTURE_DIR;
}

TEST(Fixture, ShippedFilesMatchRecordedChecksums) {
  EXPECT_TRUE(verify_fixture_checksums(kFixture).empty());
}

TEST(Fixture, RegeneratingSeed42ReproducesShippedBytes) {
  testsupport::TempDir dir;
  write_fixture(dir.path(), generate_fixture(FixtureSpec{}));
  for (const char* f : {"cases.csv", "ledger.jsonl", "grades.csv", "synonyms.json", "SHA256SUMS"}) {
    EXPECT_EQ(io::sha256_file(dir / f), io::sha256_file(kFixture / f)) << f;
  }
}

TEST(Fixture, SameSeedTwiceIsByteIdentical) {
  FixtureSpec spec;
  spec.seed = 7;
  const auto a = generate_fixture(spec);
  const auto b = generate_fixture(spec);
  EXPECT_EQ(serialize_ledger(a.ledger), serialize_ledger(b.ledger));
  EXPECT_EQ(serialize_corpus(a.cases), serialize_corpus(b.cases));
  EXPECT_EQ(serialize_grades(a.grades), serialize_grades(b.grades));
}

TEST(Fixture, DefaultsHitHeadlineCounts) {
  const auto fx = generate_fixture(FixtureSpec{});
  EXPECT_EQ(fx.cases.size(), 191u);
  EXPECT_EQ(fx.stats.n_correct, 80);
  EXPECT_EQ(fx.stats.accuracy_2, 0.0);
  EXPECT_EQ(fx.stats.accuracy_3, 0.0);
  EXPECT_EQ(fx.stats.unanimous_accuracy, 0.75);
  EXPECT_LT(fx.stats.intrinsic_p, 0.001);
  EXPECT_NEAR(fx.stats.length_p, 0.02, 1e-3);
  int disagreements = 0;
  for (const auto& g : fx.grades.entries) disagreements += g.grader_3.has_value();
  EXPECT_EQ(disagreements, 19);
}

TEST(Fixture, InfeasibleTargetsRejected) {
  FixtureSpec fractional;
  fractional.intrinsic_mean_correct = 0.7912;  // not a whole-percent total over 80 cases
  EXPECT_THROW(generate_fixture(fractional), GenerationError);

  FixtureSpec too_many;
  too_many.buckets[0].n_correct = too_many.buckets[0].n_cases + 1;
  EXPECT_THROW(generate_fixture(too_many), GenerationError);

  FixtureSpec single_class;
  for (auto& b : single_class.buckets) b.n_correct = 0;
  EXPECT_THROW(generate_fixture(single_class), GenerationError);

  FixtureSpec tied;
  tied.buckets.push_back({1, 3, 0});
  EXPECT_THROW(generate_fixture(tied), GenerationError);
}
