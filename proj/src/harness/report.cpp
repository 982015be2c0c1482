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


#include "fairlatent/harness/report.hpp"

#include <fstream>
#include <system_error>

#include <fmt/format.h>

#include "fairlatent/error.hpp"

namespace fairlatent::harness {

Json BuildManifest(const RunArtifacts& art, const ExperimentConfig& cfg,
                   const ReportContext& ctx) {
  Json m = Json::object();
  m["command"] = ctx.command;
  m["config_hash"] = HashHex(ConfigHash(cfg));
  m["config"] = CanonicalJson(cfg);
  m["seed"] = cfg.seed;
  m["repetitions"] = cfg.repetitions;
  m["jobs"] = ctx.jobs;
  Json files = Json::array();
  for (const auto& [name, table] : art.tables) files.push_back(name);
  m["files"] = files;
  Json checks = Json::array();
  for (const Check& c : art.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  m["checks"] = checks;
  m["warnings"] = art.warnings;
  m["errors"] = art.errors;
  m["status"] = art.errors.empty() ? "ok" : "failed";
  m["values"] = art.values;
  Json timings = Json::object();
  for (const auto& [stage, seconds] : ctx.timings) timings[stage] = seconds;
  m["timings_s"] = timings;
  return m;
}

void EmitReport(const RunArtifacts& art, const ExperimentConfig& cfg,
                const ReportContext& ctx, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(fmt::format("output directory {} is not writable: {}", dir.string(),
                            ec ? ec.message() : "not a directory"));
  }
  for (const auto& [name, table] : art.tables) table.WriteFile(dir / name);
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << BuildManifest(art, cfg, ctx).dump(2) << '\n';
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

}  // namespace fairlatent::harness
