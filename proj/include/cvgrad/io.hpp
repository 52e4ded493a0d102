#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cvgrad/types.hpp"

namespace cvgrad {

// Shortest representation that round-trips exactly (std::to_chars).
// Locale-independent, byte-stable across runs.
std::string format_double(double v);
double parse_double(std::string_view s);

// Minimal comma-separated writer: one header row, then numeric rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add_row(const std::vector<double>& row);
  void save(const std::filesystem::path& path) const;
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

struct CsvTable {
  std::vector<std::string> columns;
  Matrix values;  // rows x columns
};
CsvTable load_csv_table(const std::filesystem::path& path);

// Flat vector file: one number per line. Used for kernel checkpoints.
void save_flat_vector(const Vector& v, const std::filesystem::path& path);
Vector load_flat_vector(const std::filesystem::path& path);

}  // namespace cvgrad
