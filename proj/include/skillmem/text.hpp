#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace skillmem {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view line, char sep);
std::string trim(std::string_view s);

/// Reads a whole file; throws Error naming the path on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace skillmem
