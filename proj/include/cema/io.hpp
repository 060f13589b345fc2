#pragma once

#include <string>
#include <vector>

namespace cema {

// Shortest decimal string that parses back to exactly the same double.
// Keeps CSV output readable while byte-stable across runs.
std::string format_double(double v);

// Split one CSV line on commas. No quoting; fields are trimmed of
// surrounding whitespace. An empty field stays an empty string.
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace cema
