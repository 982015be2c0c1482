/*
 * Copyright 2026 The fairlatent Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "fairlatent/csv.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

std::string Escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  // fmt's default formatting for doubles is the shortest round-trip form.
  return fmt::format("{}", value);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::AddRow(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw InvalidArgument(fmt::format("csv: row has {} fields, header has {}",
                                      row.size(), header_.size()));
  }
  rows_.push_back(std::move(row));
}

void CsvTable::Write(std::ostream& out) const {
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << Escape(fields[i]);
    }
    out << '\n';
  };
  line(header_);
  for (const auto& row : rows_) line(row);
}

void CsvTable::WriteFile(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  Write(out);
  if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

CsvTable PredictionTable(std::span<const PredictionRecord> records) {
  std::vector<std::string> header = {"y_true", "y_pred"};
  const std::size_t k = records.empty() ? 0 : records.front().s.size();
  for (std::size_t i = 0; i < k; ++i) header.push_back(fmt::format("s_{}", i));
  CsvTable table(std::move(header));
  for (const PredictionRecord& r : records) {
    std::vector<std::string> row = {std::to_string(r.y_true), std::to_string(r.y_pred)};
    for (int s : r.s) row.push_back(std::to_string(s));
    table.AddRow(std::move(row));
  }
  return table;
}

}  // namespace fairlatent
