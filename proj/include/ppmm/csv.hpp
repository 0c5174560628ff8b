#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ppmm::csv {

/// Formats a double so that parsing the text recovers the exact bits.
std::string format_double(double x);

double parse_double(const std::string& token);  // throws on junk

std::vector<std::string> split(const std::string& line, char delim = ',');
std::string trim(const std::string& s);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory followed by a rename, so
/// a partially written file is never observed under the final name.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// Parsed numeric table: a header row plus double rows. Lines starting
/// with '#' are collected separately as comments.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> comments;

  int column(const std::string& name) const;  // -1 when absent
};

Table read_table(const std::filesystem::path& path);
Table parse_table(const std::string& text);

}  // namespace ppmm::csv
