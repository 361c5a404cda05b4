#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace typicality::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
/// Throws Error(Parse) on an unterminated quote.
std::vector<std::string> split(std::string_view line);

/// Quotes a field when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

/// Joins escaped fields with commas (no trailing newline).
std::string join(const std::vector<std::string>& fields);

/// Parses a finite or non-finite decimal number; the whole field must be consumed.
bool parse_double(std::string_view field, double& out);

}  // namespace typicality::csv
