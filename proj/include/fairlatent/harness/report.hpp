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


#ifndef FAIRLATENT_HARNESS_REPORT_HPP_
#define FAIRLATENT_HARNESS_REPORT_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fairlatent/harness/config.hpp"
#include "fairlatent/harness/experiments.hpp"

namespace fairlatent::harness {

struct ReportContext {
  std::string command;
  std::size_t jobs = 1;
  // Stage name and wall seconds. Only the manifest carries timings, so CSVs
  // stay byte-identical across runs and job counts.
  std::vector<std::pair<std::string, double>> timings;
};

Json BuildManifest(const RunArtifacts& art, const ExperimentConfig& cfg,
                   const ReportContext& ctx);

// Writes every table plus manifest.json into dir, creating it if needed.
// Throws Error when dir cannot be created or written.
void EmitReport(const RunArtifacts& art, const ExperimentConfig& cfg,
                const ReportContext& ctx, const std::filesystem::path& dir);

}  // namespace fairlatent::harness

#endif  // FAIRLATENT_HARNESS_REPORT_HPP_
