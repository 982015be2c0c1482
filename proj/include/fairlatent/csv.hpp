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


#ifndef FAIRLATENT_CSV_HPP_
#define FAIRLATENT_CSV_HPP_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fairlatent/metrics.hpp"

namespace fairlatent {

// Shortest text that round-trips the double ("{:.17g}"-style precision).
std::string FormatDouble(double value);

// Small in-memory table written as RFC 4180-ish CSV with '\n' line ends.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void AddRow(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void Write(std::ostream& out) const;
  // Throws Error when the file cannot be written.
  void WriteFile(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Columns y_true, y_pred, s_0..s_{K-1}.
CsvTable PredictionTable(std::span<const PredictionRecord> records);

}  // namespace fairlatent

#endif  // FAIRLATENT_CSV_HPP_
