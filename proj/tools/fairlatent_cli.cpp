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


// Command-line front end for the experiment harness.
//
// Exit codes: 0 ok, 1 config error, 2 run failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "fairlatent/error.hpp"
#include "fairlatent/harness/config.hpp"
#include "fairlatent/harness/experiments.hpp"
#include "fairlatent/harness/report.hpp"

namespace fh = fairlatent::harness;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::size_t jobs = 1;
};

void AddCommon(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", args.out, "output directory; overrides output_dir");
  sub->add_option("--seed", args.seed, "base seed; overrides the config");
  sub->add_option("--reps", args.reps, "repetitions; overrides the config")
      ->check(CLI::PositiveNumber);
  sub->add_option("--jobs", args.jobs, "worker threads; never changes outputs")
      ->check(CLI::PositiveNumber);
}

int Run(const std::string& command, const CommonArgs& args,
        const std::vector<std::string>& method_names) {
  fh::ExperimentConfig cfg;
  std::vector<fh::Method> methods;
  try {
    cfg = fh::LoadConfig(args.config);
    if (args.out) cfg.output_dir = *args.out;
    if (args.seed) cfg.seed = *args.seed;
    if (args.reps) cfg.repetitions = *args.reps;
    cfg.Validate();
    if (method_names.empty()) {
      methods = fh::AllMethods();
    } else {
      for (const auto& name : method_names) methods.push_back(fh::ParseMethod(name));
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "{{\"errors\": [\"config: {}\"]}}\n", e.what());
    return 1;
  }

  fh::ReportContext ctx;
  ctx.command = command;
  ctx.jobs = args.jobs;
  const auto start = std::chrono::steady_clock::now();
  try {
    fh::RunArtifacts art;
    if (command == "gen-data") {
      art = fh::GenerateData(cfg, args.jobs, cfg.output_dir);
    } else if (command == "lambda-sweep") {
      art = fh::RunLambdaSweep(cfg, args.jobs).Artifacts();
    } else if (command == "pipeline") {
      art = fh::RunPipeline(cfg, methods, args.jobs).Artifacts();
    } else if (command == "bias-sweep") {
      art = fh::RunBiasSweep(cfg, args.jobs).Artifacts();
    } else if (command == "label-sweep") {
      art = fh::RunLabelSweep(cfg, args.jobs).Artifacts();
    } else {
      art = fh::RunLambdaPairAblation(cfg, args.jobs).Artifacts();
    }
    ctx.timings.emplace_back(
        "run", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    fh::EmitReport(art, cfg, ctx, cfg.output_dir);

    for (const auto& c : art.checks) {
      fmt::print("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
    }
    for (const auto& w : art.warnings) fmt::print(stderr, "warning: {}\n", w);
    if (!art.errors.empty()) {
      fairlatent::Json j = {{"errors", art.errors}};
      fmt::print(stderr, "{}\n", j.dump());
      return 2;
    }
  } catch (const fairlatent::ConfigError& e) {
    fmt::print(stderr, "{}\n", fairlatent::Json({{"errors", {std::string("config: ") + e.what()}}}).dump());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "{}\n", fairlatent::Json({{"errors", {e.what()}}}).dump());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairlatent experiment harness"};
  app.require_subcommand(1);
  CommonArgs args;
  std::vector<std::string> methods;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "write train/eval datasets as CSV"},
      {"lambda-sweep", "classifier bias over the lambda and world grid"},
      {"pipeline", "end-to-end arms on one world"},
      {"bias-sweep", "erm and diga across spurious-correlation strengths"},
      {"label-sweep", "probe label-ratio robustness"},
      {"lambda-pair", "diga across (lambda1, lambda2) pairs"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommon(sub, args);
    if (name == "pipeline") {
      sub->add_option("--method", methods, "arms to run (default: all)");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return Run(app.get_subcommands().front()->get_name(), args, methods);
}
