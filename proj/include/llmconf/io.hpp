#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace llmconf::io {

// One RFC 4180 record and the 1-based line it starts on.
struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// Parses comma-delimited text with RFC 4180 quoting. Accepts LF or CRLF
// record separators; a trailing newline does not produce an empty record.
std::vector<CsvRow> parse_csv(std::string_view text);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Number of Unicode scalar values in a UTF-8 string (continuation bytes
// are not counted).
std::size_t utf8_length(std::string_view text);

}  // namespace llmconf::io
