#include "cvgrad/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cvgrad/errors.hpp"

namespace cvgrad {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw ArgumentError("cannot parse number: '" + std::string(s) + "'");
  return v;
}

void CsvWriter::add_row(const std::vector<double>& row) {
  if (row.size() != columns_.size())
    throw ArgumentError("csv row length does not match header");
  rows_.push_back(row);
}

void CsvWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out << ',';
    out << columns_[i];
  }
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable load_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("empty csv: " + path.string());
  CsvTable table;
  table.columns = split_line(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.columns.size())
      throw ArgumentError("ragged csv row in " + path.string());
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_double(cells[i]);
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.columns.size()));
  for (Index r = 0; r < table.values.rows(); ++r)
    for (Index c = 0; c < table.values.cols(); ++c)
      table.values(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return table;
}

void save_flat_vector(const Vector& v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open for writing: " + path.string());
  for (Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
}

Vector load_flat_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open: " + path.string());
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    vals.push_back(parse_double(line));
  }
  Vector v(static_cast<Index>(vals.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace cvgrad
