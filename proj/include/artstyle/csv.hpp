#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace artstyle::csv {

// Minimal RFC-4180-style helpers: double-quoted fields with "" escapes.
// Embedded newlines inside quoted fields are not supported.

std::vector<std::string> split_line(std::string_view line);

// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

// Splits text into lines, tolerating \r\n and a missing final newline.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace artstyle::csv
