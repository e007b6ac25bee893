#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gmmf::csv {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Splits one line on commas (no quoting; fields never contain commas here).
std::vector<std::string> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view text);

}  // namespace gmmf::csv
