#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "marrr/errors.hpp"

namespace marrr::csv {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quote in CSV line");
  fields.push_back(std::move(field));
  return fields;
}

std::string join_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out += f;
      continue;
    }
    out.push_back('"');
    for (char c : f) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
  }
  return out;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

Table read(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw SchemaError(path.string() + ": missing header row");
  Table t;
  t.header = split_line(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) t.rows.push_back(split_line(lines[i]));
  return t;
}

void write(const std::filesystem::path& path, const Table& table) {
  auto out = open_out(path);
  out << join_line(table.header) << '\n';
  for (const auto& row : table.rows) out << join_line(row) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text == "Inf") return INFINITY;
  if (text == "-Inf") return -INFINITY;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError(std::string(context) + ": not a number: '" + std::string(text) + "'");
  return value;
}

long long parse_integer(std::string_view text, std::string_view context) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  long long value = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError(std::string(context) + ": not an integer: '" + std::string(text) + "'");
  return value;
}

std::string matrix_to_text(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_double(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix matrix_from_lines(const std::vector<std::string>& lines, std::string_view context) {
  if (lines.empty()) return Matrix(0, 0);
  std::vector<std::vector<std::string>> cells;
  cells.reserve(lines.size());
  for (const auto& l : lines) cells.push_back(split_line(l));
  const Index cols = static_cast<Index>(cells.front().size());
  Matrix m(static_cast<Index>(cells.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    if (static_cast<Index>(cells[i].size()) != cols)
      throw DimensionError(std::string(context) + ": ragged matrix row " + std::to_string(i));
    for (Index j = 0; j < cols; ++j) {
      const auto& c = cells[i][j];
      m(i, j) = c == "NA" ? NAN : parse_double(c, context);
    }
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  out << matrix_to_text(m);
  if (!out) throw IoError("failed writing " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  return matrix_from_lines(read_lines(path), path.string());
}

}  // namespace marrr::csv
