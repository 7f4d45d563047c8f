// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/table.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spherelab/errors.hpp"

namespace spherelab {

std::size_t Table::col(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw_runtime("table has no column '" + name + "'");
}

bool Table::has_col(const std::string& name) const {
  for (const auto& c : columns) {
    if (c == name) return true;
  }
  return false;
}

std::vector<double> Table::column(const std::string& name) const {
  const std::size_t i = col(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(i));
  return out;
}

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw_runtime("table row width mismatch");
  }
  rows.push_back(std::move(row));
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_runtime("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_g17(row[i]);
    }
    out << '\n';
  }
  if (!out) throw_runtime("write failed for '" + path + "'");
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_runtime("cannot open '" + path + "'");
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw_runtime("empty csv file '" + path + "'");
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) table.columns.push_back(field);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.columns.size());
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw_runtime("non-numeric field '" + field + "' in '" + path + "'");
      }
    }
    table.add_row(std::move(row));
  }
  return table;
}

}  // namespace spherelab
