#include "fuseclust/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fuseclust {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

int CsvTable::column_index(const std::string& name) const {
  for (size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open file: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty file: " + path);
  for (auto& h : split_line(line)) table.header.push_back(trim(h));
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw CsvError(path + ": row " + std::to_string(lineno) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(table.header.size()));
    }
    for (auto& c : cells) c = trim(c);
    table.rows.push_back(std::move(cells));
  }
  return table;
}

double parse_cell(const CsvTable& table, Index row, int col) {
  const std::string& cell = table.rows[static_cast<size_t>(row)][static_cast<size_t>(col)];
  if (cell.empty()) {
    throw CsvError("missing value at row " + std::to_string(row + 2) +
                   ", column '" + table.header[static_cast<size_t>(col)] + "'");
  }
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw CsvError("malformed numeric cell '" + cell + "' at row " +
                   std::to_string(row + 2) + ", column '" +
                   table.header[static_cast<size_t>(col)] + "'");
  }
  return value;
}

Matrix csv_to_matrix(const CsvTable& table, const std::vector<std::string>& columns) {
  std::vector<int> idx;
  if (columns.empty()) {
    for (size_t c = 0; c < table.header.size(); ++c) idx.push_back(static_cast<int>(c));
  } else {
    for (const auto& name : columns) {
      const int c = table.column_index(name);
      if (c < 0) throw CsvError("column '" + name + "' not found");
      idx.push_back(c);
    }
  }
  Matrix m(table.n_rows(), static_cast<Index>(idx.size()));
  for (Index r = 0; r < table.n_rows(); ++r)
    for (size_t c = 0; c < idx.size(); ++c)
      m(r, static_cast<Index>(c)) = parse_cell(table, r, idx[c]);
  return m;
}

Vector csv_to_vector(const CsvTable& table, const std::string& column) {
  const int c = table.column_index(column);
  if (c < 0) throw CsvError("column '" + column + "' not found");
  Vector v(table.n_rows());
  for (Index r = 0; r < table.n_rows(); ++r) v[r] = parse_cell(table, r, c);
  return v;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write file: " + path);
  for (size_t c = 0; c < header.size(); ++c)
    out << header[c] << (c + 1 < header.size() ? "," : "");
  out << "\n";
  char buf[40];
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", values(r, c));
      out << buf << (c + 1 < values.cols() ? "," : "");
    }
    out << "\n";
  }
}

void write_labels_csv(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write file: " + path);
  out << "label\n";
  for (int l : labels) out << l << "\n";
}

std::vector<int> read_labels_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  const int c = table.column_index("label") >= 0 ? table.column_index("label") : 0;
  std::vector<int> labels;
  labels.reserve(static_cast<size_t>(table.n_rows()));
  for (Index r = 0; r < table.n_rows(); ++r)
    labels.push_back(static_cast<int>(parse_cell(table, r, c)));
  return labels;
}

}  // namespace fuseclust
