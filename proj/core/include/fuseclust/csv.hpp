#pragma once

#include <string>
#include <vector>

#include "fuseclust/types.hpp"

namespace fuseclust {

// Minimal CSV support: comma delimiter, one header row, '.' decimal point,
// UTF-8. Missing (empty) cells are rejected. Parse errors name the offending
// row and column.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 if absent
  Index n_rows() const { return static_cast<Index>(rows.size()); }
};

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

CsvTable read_csv(const std::string& path);

// Numeric view of selected columns (all columns if `columns` is empty).
Matrix csv_to_matrix(const CsvTable& table,
                     const std::vector<std::string>& columns = {});
Vector csv_to_vector(const CsvTable& table, const std::string& column);

double parse_cell(const CsvTable& table, Index row, int col);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);
void write_labels_csv(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_labels_csv(const std::string& path);

}  // namespace fuseclust
