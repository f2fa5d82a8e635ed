#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mcqeval {

std::string trim(std::string_view s);

bool ends_with(std::string_view s, std::string_view suffix);

// Number of Unicode scalar values. Invalid bytes count as one scalar each so
// the function is total over arbitrary byte strings.
std::size_t utf8_scalar_count(std::string_view s);

// Splits into one string per Unicode scalar (invalid bytes become single-byte
// pieces). Concatenation of the pieces reproduces the input.
std::vector<std::string> utf8_scalars(std::string_view s);

// Shortest round-trip decimal form, locale-independent.
std::string format_double(double v);

// One CSV record, RFC-4180 quoting ("" escapes a quote inside a quoted cell).
// Fields do not span lines.
std::vector<std::string> parse_csv_row(std::string_view line);

std::string csv_quote(std::string_view cell);

// Lowercase-hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

} // namespace mcqeval
