#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "marrr/linalg.hpp"

namespace marrr::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Comma-separated, double quotes for fields holding commas or quotes.
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

std::vector<std::string> split_line(std::string_view line);
std::string join_line(const std::vector<std::string>& fields);

// Shortest text that reads back to the same double. NaN is written as "NA".
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view context);
long long parse_integer(std::string_view text, std::string_view context);

// Unlabeled numeric matrix, one row per line.
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

std::string matrix_to_text(const Matrix& m);
Matrix matrix_from_lines(const std::vector<std::string>& lines, std::string_view context);

}  // namespace marrr::csv
