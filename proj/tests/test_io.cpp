#include <gtest/gtest.h>

#include "llmconf/io.hpp"
#include "test_support.hpp"

using namespace llmconf::io;

TEST(Csv, QuotedFieldsWithCommasNewlinesAndQuotes) {
  const auto rows = parse_csv("a,b\n\"x, y\",\"line1\nline2 \"\"q\"\"\"\nlast,\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"x, y", "line1\nline2 \"q\""}));
  EXPECT_EQ(rows[1].line, 2u);
  EXPECT_EQ(rows[2].fields, (std::vector<std::string>{"last", ""}));
  EXPECT_EQ(rows[2].line, 4u);
}

TEST(Csv, CrlfAndMissingTrailingNewline) {
  const auto rows = parse_csv("a,b\r\n1,2\r\n3,4");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].fields, (std::vector<std::string>{"3", "4"}));
}

TEST(Csv, StrayCharacterAfterClosingQuoteIsRejected) {
  EXPECT_THROW(parse_csv("\"ab\"c,d\n"), llmconf::ParseError);
  EXPECT_THROW(parse_csv("\"unterminated\n"), llmconf::ParseError);
}

TEST(Csv, EscapeRoundTrips) {
  const std::vector<std::string> fields = {"plain", "a,b", "say \"hi\"", "two\nlines", ""};
  const auto rows = parse_csv(csv_line(fields));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].fields, fields);
  EXPECT_EQ(csv_escape("plain"), "plain");
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Utf8, CountsScalarValues) {
  EXPECT_EQ(utf8_length(""), 0u);
  EXPECT_EQ(utf8_length("abc"), 3u);
  EXPECT_EQ(utf8_length("Behçet"), 6u);
  EXPECT_EQ(utf8_length("38.6 °C"), 7u);
  EXPECT_EQ(utf8_length("\xF0\x9F\x98\x80"), 1u);  // U+1F600
}

TEST(AtomicWrite, ReplacesContentAndLeavesNoTempFile) {
  testsupport::TempDir dir;
  const auto path = dir / "sub/out.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  EXPECT_EQ(read_file(path), "second");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  EXPECT_EQ(sha256_file(path), sha256_hex("second"));
}
