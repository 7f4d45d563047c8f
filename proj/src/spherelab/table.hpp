// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace spherelab {

// All-numeric table with named columns, the unit of experiment output.
// CSV form: one header line, then rows with floats rendered via %.17g
// (lossless double round-trip), row order as stored (canonical: time-major,
// then channel index).
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const;  // throws if missing
  bool has_col(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  void add_row(std::vector<double> row);
};

std::string format_g17(double v);

void write_csv(const Table& table, const std::string& path);
Table read_csv(const std::string& path);

}  // namespace spherelab
