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


#include "fairlatent/harness/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <concepts>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "fairlatent/error.hpp"
#include "fairlatent/serialization.hpp"

namespace fairlatent::harness {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string Num(double v) { return FormatDouble(v); }
// Four decimals for human-readable check details.
std::string Brief(double v) { return fmt::format("{:.4f}", v); }

template <std::integral T>
std::string Num(T v) {
  return std::to_string(v);
}

// Published synthetic table: ratio, sigma_y, sigma_s, then lambda = 1..1e4.
struct ReferenceRow {
  double ratio, sigma_y, sigma_s;
  double values[5];
};

// The 14:1 / 0.1 / 1.0 / lambda=100 entry is printed without its leading
// "0."; the neighbouring cells make 0.159 the only sensible reading.
constexpr ReferenceRow kReference[] = {
    {2, 0.1, 0.1, {0.027, 0.032, 0.039, 0.051, 0.072}},
    {2, 0.1, 1.0, {0.027, 0.032, 0.040, 0.051, 0.072}},
    {2, 1.0, 0.1, {0.026, 0.031, 0.039, 0.051, 0.073}},
    {2, 1.0, 1.0, {0.030, 0.033, 0.040, 0.051, 0.073}},
    {3, 0.1, 0.1, {0.043, 0.051, 0.063, 0.082, 0.116}},
    {3, 0.1, 1.0, {0.043, 0.051, 0.063, 0.082, 0.116}},
    {3, 1.0, 0.1, {0.041, 0.050, 0.062, 0.082, 0.117}},
    {3, 1.0, 1.0, {0.044, 0.051, 0.063, 0.082, 0.117}},
    {4, 0.1, 0.1, {0.054, 0.065, 0.080, 0.104, 0.148}},
    {4, 0.1, 1.0, {0.052, 0.063, 0.079, 0.104, 0.148}},
    {4, 1.0, 0.1, {0.052, 0.063, 0.079, 0.104, 0.150}},
    {4, 1.0, 1.0, {0.055, 0.064, 0.079, 0.104, 0.149}},
    {5, 0.1, 0.1, {0.063, 0.076, 0.094, 0.122, 0.175}},
    {5, 0.1, 1.0, {0.063, 0.075, 0.093, 0.122, 0.174}},
    {5, 1.0, 0.1, {0.061, 0.074, 0.093, 0.122, 0.176}},
    {5, 1.0, 1.0, {0.064, 0.075, 0.093, 0.122, 0.175}},
    {6, 0.1, 0.1, {0.071, 0.085, 0.105, 0.137, 0.197}},
    {6, 0.1, 1.0, {0.070, 0.084, 0.104, 0.137, 0.195}},
    {6, 1.0, 0.1, {0.069, 0.083, 0.104, 0.137, 0.199}},
    {6, 1.0, 1.0, {0.071, 0.084, 0.104, 0.136, 0.197}},
    {7, 0.1, 0.1, {0.077, 0.092, 0.115, 0.150, 0.216}},
    {7, 0.1, 1.0, {0.077, 0.092, 0.114, 0.149, 0.214}},
    {7, 1.0, 0.1, {0.075, 0.090, 0.113, 0.150, 0.218}},
    {7, 1.0, 1.0, {0.077, 0.091, 0.113, 0.149, 0.216}},
    {8, 0.1, 0.1, {0.082, 0.099, 0.123, 0.162, 0.233}},
    {8, 0.1, 1.0, {0.082, 0.099, 0.122, 0.160, 0.231}},
    {8, 1.0, 0.1, {0.080, 0.097, 0.122, 0.161, 0.235}},
    {8, 1.0, 1.0, {0.082, 0.097, 0.121, 0.160, 0.233}},
    {9, 0.1, 0.1, {0.087, 0.105, 0.131, 0.172, 0.248}},
    {9, 0.1, 1.0, {0.087, 0.105, 0.130, 0.171, 0.246}},
    {9, 1.0, 0.1, {0.085, 0.103, 0.129, 0.172, 0.250}},
    {9, 1.0, 1.0, {0.087, 0.103, 0.129, 0.171, 0.248}},
    {10, 0.1, 0.1, {0.092, 0.110, 0.138, 0.181, 0.262}},
    {10, 0.1, 1.0, {0.092, 0.110, 0.137, 0.180, 0.260}},
    {10, 1.0, 0.1, {0.089, 0.108, 0.136, 0.181, 0.264}},
    {10, 1.0, 1.0, {0.092, 0.109, 0.136, 0.180, 0.262}},
    {11, 0.1, 0.1, {0.096, 0.115, 0.144, 0.189, 0.275}},
    {11, 0.1, 1.0, {0.096, 0.115, 0.143, 0.188, 0.272}},
    {11, 1.0, 0.1, {0.093, 0.113, 0.142, 0.189, 0.277}},
    {11, 1.0, 1.0, {0.096, 0.114, 0.142, 0.188, 0.275}},
    {12, 0.1, 0.1, {0.100, 0.120, 0.150, 0.197, 0.286}},
    {12, 0.1, 1.0, {0.099, 0.119, 0.149, 0.196, 0.284}},
    {12, 1.0, 0.1, {0.097, 0.118, 0.148, 0.197, 0.289}},
    {12, 1.0, 1.0, {0.099, 0.118, 0.148, 0.196, 0.287}},
    {13, 0.1, 0.1, {0.103, 0.124, 0.155, 0.205, 0.298}},
    {13, 0.1, 1.0, {0.103, 0.124, 0.154, 0.203, 0.294}},
    {13, 1.0, 0.1, {0.101, 0.122, 0.154, 0.205, 0.301}},
    {13, 1.0, 1.0, {0.103, 0.123, 0.153, 0.203, 0.298}},
    {14, 0.1, 0.1, {0.107, 0.128, 0.160, 0.211, 0.308}},
    {14, 0.1, 1.0, {0.106, 0.128, 0.159, 0.210, 0.306}},
    {14, 1.0, 0.1, {0.104, 0.126, 0.159, 0.212, 0.311}},
    {14, 1.0, 1.0, {0.106, 0.127, 0.158, 0.210, 0.309}},
};

bool Near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

std::string ArmStatus(const ArmResult& arm) { return arm.ok ? "ok" : "failed"; }

double Metric(const ArmResult& arm, const std::string& name) {
  if (!arm.ok) return kNaN;
  if (name == "acc") return arm.report.accuracy;
  if (name == "wst") return arm.report.worst_group;
  if (name == "eo") return arm.report.eo;
  return arm.spurious_acc;
}

const std::vector<std::string>& MetricNames() {
  static const std::vector<std::string> names = {"acc", "wst", "eo", "spurious_acc"};
  return names;
}

ArmSummary SummarizeArms(const std::vector<const ArmResult*>& arms) {
  std::vector<double> acc, wst, eo, sp;
  for (const ArmResult* a : arms) {
    if (!a->ok) continue;
    acc.push_back(a->report.accuracy);
    wst.push_back(a->report.worst_group);
    eo.push_back(a->report.eo);
    sp.push_back(a->spurious_acc);
  }
  return {Summarize(acc), Summarize(wst), Summarize(eo), Summarize(sp)};
}

std::vector<std::string> SummaryHeader(std::vector<std::string> keys) {
  for (const char* m : {"acc", "wst", "eo", "spurious_acc"}) {
    keys.push_back(fmt::format("{}_mean", m));
    keys.push_back(fmt::format("{}_std", m));
  }
  keys.push_back("reps");
  return keys;
}

void AppendSummary(std::vector<std::string>& row, const ArmSummary& s) {
  for (const MeanStd* m : {&s.acc, &s.wst, &s.eo, &s.spurious_acc}) {
    row.push_back(m->count ? Num(m->mean) : "nan");
    row.push_back(m->count ? Num(m->std) : "nan");
  }
  row.push_back(Num(s.acc.count));
}

// Least-squares slope of y on x.
double Slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

WorldSpec WorldFor(const ExperimentConfig& cfg) {
  WorldSpec world = cfg.world;
  world.seed = cfg.seed;
  return world;
}

bool NeedsDirection(std::span<const Method> methods) {
  return std::any_of(methods.begin(), methods.end(), [](Method m) {
    return m == Method::kSinglePoint || m == Method::kDiga;
  });
}

ArmResult FailedArm(Method method, std::string error) {
  ArmResult arm;
  arm.method = method;
  arm.error = std::move(error);
  return arm;
}

// Encoder training and probing for one arm, with failures captured.
ArmResult RunArm(const ExperimentConfig& cfg, Method method, const RepData& data,
                 const DirectionStage& direction, const std::vector<bool>& mask,
                 std::uint32_t rep) {
  if ((method == Method::kSinglePoint || method == Method::kDiga) && !direction.info.ok) {
    return FailedArm(method, "direction stage failed: " + direction.info.error);
  }
  try {
    if (method == Method::kErm) return EvaluateArm(cfg, method, nullptr, data, mask);
    const EncoderState state = TrainArm(cfg, method, data.train, direction, rep);
    return EvaluateArm(cfg, method, &state, data, mask);
  } catch (const std::exception& e) {
    return FailedArm(method, e.what());
  }
}

void AddDirectionRow(CsvTable& table, std::vector<std::string> prefix,
                     const DirectionInfo& d) {
  if (!d.ok) {
    prefix.insert(prefix.end(), {"nan", "nan", "nan", "nan", "nan", "nan", "nan", "nan",
                                 "nan", "failed"});
  } else {
    prefix.insert(prefix.end(),
                  {Num(d.beta_clf1), Num(d.beta_clf2), Num(d.c1), Num(d.c2),
                   Num(d.implied_ratio), Num(d.chosen_ratio), Num(d.residual),
                   Num(d.alpha_l), Num(d.alpha_u), "ok"});
  }
  table.AddRow(std::move(prefix));
}

std::vector<std::string> DirectionHeader(std::vector<std::string> keys) {
  keys.insert(keys.end(), {"beta_clf1", "beta_clf2", "c1", "c2", "implied_ratio",
                           "chosen_ratio", "residual", "alpha_l", "alpha_u", "status"});
  return keys;
}

}  // namespace

void ParallelFor(std::size_t count, std::size_t jobs,
                 const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, count));
  std::vector<std::exception_ptr> failures(count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

MeanStd Summarize(std::span<const double> values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::optional<double> ReferenceBetaClf(double ratio, double sigma_y, double sigma_s,
                                       double lambda) {
  static constexpr double kLambdas[] = {1.0, 10.0, 100.0, 1000.0, 10000.0};
  for (const ReferenceRow& row : kReference) {
    if (!Near(row.ratio, ratio) || !Near(row.sigma_y, sigma_y) || !Near(row.sigma_s, sigma_s)) {
      continue;
    }
    for (int i = 0; i < 5; ++i) {
      if (Near(kLambdas[i], lambda)) return row.values[i];
    }
  }
  return std::nullopt;
}

// ---- lambda sweep -----------------------------------------------------------

MeanStd LambdaSweepResult::Cell(std::size_t cell, std::size_t lambda) const {
  std::vector<double> v;
  for (const auto& b : beta[cell][lambda]) {
    if (b) v.push_back(*b);
  }
  return Summarize(v);
}

LambdaSweepResult RunLambdaSweep(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.Validate();
  const LambdaSweepSection& sweep = cfg.lambda_sweep;
  LambdaSweepResult out;
  out.cells = sweep.cells;
  out.lambdas = sweep.lambdas;
  out.reps = cfg.repetitions;
  out.convention = cfg.regression.convention;
  const std::size_t nc = out.cells.size(), nl = out.lambdas.size(), nr = out.reps;
  out.beta.assign(nc, std::vector<std::vector<std::optional<double>>>(
                          nl, std::vector<std::optional<double>>(nr)));
  out.converged.assign(nc, std::vector<std::vector<char>>(nl, std::vector<char>(nr, 0)));

  // Cells sharing a ratio differ only in their sigmas, so one noise draw
  // serves the whole group and each dataset still equals its own sample.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t c = 0; c < nc; ++c) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return Near(out.cells[g.front()].ratio, out.cells[c].ratio);
    });
    if (it == groups.end()) {
      groups.push_back({c});
    } else {
      it->push_back(c);
    }
  }
  std::vector<RegressionConfig> regs;
  for (double lambda : out.lambdas) regs.push_back(cfg.Regression(lambda));

  std::vector<std::vector<std::string>> task_errors(groups.size() * nr);
  ParallelFor(groups.size() * nr, jobs, [&](std::size_t task) {
    const auto& group = groups[task / nr];
    const auto rep = static_cast<std::uint32_t>(task % nr);
    std::vector<WorldSpec> specs;
    for (std::size_t c : group) {
      const LambdaSweepCell& cell = out.cells[c];
      specs.push_back(WorldSpec::SingleBlock(sweep.d, sweep.n,
                                             WorldSpec::BiasFromRatio(cell.ratio),
                                             cell.sigma_y, cell.sigma_s, cfg.seed));
    }
    std::vector<Dataset> data;
    try {
      data = SampleWithSharedNoise(specs, rep);
    } catch (const std::exception& e) {
      for (std::size_t c : group) {
        task_errors[task].push_back(
            fmt::format("cell {} rep {}: {}", out.cells[c].Label(), rep, e.what()));
      }
      return;
    }
    for (std::size_t k = 0; k < group.size(); ++k) {
      const std::size_t c = group[k];
      try {
        const std::vector<FittedDirection> fits = FitPath(data[k], regs);
        for (std::size_t l = 0; l < nl; ++l) {
          out.beta[c][l][rep] = fits[l].beta_clf;
          out.converged[c][l][rep] = fits[l].converged ? 1 : 0;
        }
      } catch (const std::exception& e) {
        task_errors[task].push_back(
            fmt::format("cell {} rep {}: {}", out.cells[c].Label(), rep, e.what()));
      }
    }
  });
  for (auto& errs : task_errors) {
    out.errors.insert(out.errors.end(), errs.begin(), errs.end());
  }
  return out;
}

RunArtifacts LambdaSweepResult::Artifacts() const {
  RunArtifacts art;
  art.errors = errors;
  const std::size_t nc = cells.size(), nl = lambdas.size();

  CsvTable summary({"config", "lambda", "beta_clf_mean", "beta_clf_std", "reps"});
  CsvTable per_rep({"config", "lambda", "rep", "beta_clf", "converged"});
  std::vector<std::string> wide_header = {"config", "ratio", "sigma_y", "sigma_s"};
  for (double l : lambdas) wide_header.push_back("lambda_" + Num(l));
  CsvTable wide(wide_header);
  CsvTable long_table({"config", "ratio", "sigma_y", "sigma_s", "lambda", "metric", "value"});

  std::size_t unconverged = 0;
  std::vector<std::vector<MeanStd>> stats(nc, std::vector<MeanStd>(nl));
  Json cell_values = Json::array();
  for (std::size_t c = 0; c < nc; ++c) {
    const LambdaSweepCell& cell = cells[c];
    const std::string label = cell.Label();
    std::vector<std::string> wide_row = {label, Num(cell.ratio), Num(cell.sigma_y),
                                         Num(cell.sigma_s)};
    Json means = Json::array();
    for (std::size_t l = 0; l < nl; ++l) {
      stats[c][l] = Cell(c, l);
      const MeanStd& s = stats[c][l];
      const bool valid = s.count == reps;
      summary.AddRow({label, Num(lambdas[l]), valid ? Num(s.mean) : "nan",
                      valid ? Num(s.std) : "nan", Num(s.count)});
      wide_row.push_back(valid ? Num(s.mean) : "nan");
      const std::pair<const char*, double> metrics[] = {{"beta_clf_mean", s.mean},
                                                        {"beta_clf_std", s.std}};
      for (const auto& [metric, v] : metrics) {
        long_table.AddRow({label, Num(cell.ratio), Num(cell.sigma_y), Num(cell.sigma_s),
                           Num(lambdas[l]), metric, valid ? Num(v) : "nan"});
      }
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& b = beta[c][l][r];
        per_rep.AddRow({label, Num(lambdas[l]), Num(r), b ? Num(*b) : "nan",
                        converged[c][l][r] ? "1" : "0"});
        if (b && !converged[c][l][r]) ++unconverged;
      }
      means.push_back(valid ? Json(s.mean) : Json(nullptr));
    }
    wide.AddRow(std::move(wide_row));
    cell_values.push_back({{"config", label}, {"beta_clf_mean", means}});
  }
  art.values["cells"] = cell_values;
  if (unconverged > 0) {
    art.warnings.push_back(fmt::format("{} fits stopped before reaching tolerance", unconverged));
  }

  // Strict increase in lambda for every cell.
  {
    Check check{"lambda_monotone", true, ""};
    std::size_t violations = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t l = 1; l < nl; ++l) {
        if (!(stats[c][l].mean > stats[c][l - 1].mean) || stats[c][l].count != reps ||
            stats[c][l - 1].count != reps) {
          ++violations;
          if (violations <= 5) {
            check.detail += fmt::format("{} lambda {}->{}: {} vs {}; ", cells[c].Label(),
                                        Num(lambdas[l - 1]), Num(lambdas[l]),
                                        Num(stats[c][l - 1].mean), Num(stats[c][l].mean));
          }
        }
      }
    }
    check.passed = violations == 0;
    check.detail = fmt::format("{} violations over {} cells. {}", violations, nc, check.detail);
    art.checks.push_back(check);
  }
  // Strict increase in ratio at the largest lambda, per sigma combination.
  if (nl > 0) {
    const std::size_t top = static_cast<std::size_t>(
        std::max_element(lambdas.begin(), lambdas.end()) - lambdas.begin());
    std::map<std::pair<double, double>, std::vector<std::size_t>> by_sigma;
    for (std::size_t c = 0; c < nc; ++c) by_sigma[{cells[c].sigma_y, cells[c].sigma_s}].push_back(c);
    Check check{"ratio_monotone", true, ""};
    std::size_t violations = 0;
    for (auto& [sig, idx] : by_sigma) {
      std::sort(idx.begin(), idx.end(),
                [&](std::size_t a, std::size_t b) { return cells[a].ratio < cells[b].ratio; });
      for (std::size_t k = 1; k < idx.size(); ++k) {
        const MeanStd& lo = stats[idx[k - 1]][top];
        const MeanStd& hi = stats[idx[k]][top];
        if (!(hi.mean > lo.mean) || lo.count != reps || hi.count != reps) {
          ++violations;
          check.detail += fmt::format("{} vs {}; ", cells[idx[k - 1]].Label(),
                                      cells[idx[k]].Label());
        }
      }
    }
    check.passed = violations == 0;
    check.detail = fmt::format("lambda {}: {} violations. {}", Num(lambdas[top]), violations,
                               check.detail);
    art.checks.push_back(check);
  }
  // Agreement with the published table where this sweep overlaps it.
  {
    std::size_t compared = 0, outside = 0;
    double worst = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t l = 0; l < nl; ++l) {
        const auto ref = ReferenceBetaClf(cells[c].ratio, cells[c].sigma_y, cells[c].sigma_s,
                                          lambdas[l]);
        if (!ref || stats[c][l].count == 0) continue;
        ++compared;
        const double tol = std::max(0.02, 0.25 * *ref);
        const double dev = std::abs(stats[c][l].mean - *ref);
        worst = std::max(worst, dev / tol);
        if (dev > tol) ++outside;
      }
    }
    if (compared > 0) {
      Check check{"reference_agreement", outside == 0,
                  fmt::format("{} of {} cells outside max(0.02, 25%); worst deviation {} of "
                              "tolerance; convention {}",
                              outside, compared, Num(worst), ToString(convention))};
      art.checks.push_back(check);
      if (outside > 0) {
        art.warnings.push_back(fmt::format(
            "convention mismatch: {} of {} cells disagree with the reference table under "
            "{}; the other regularization convention may be the intended one",
            outside, compared, ToString(convention)));
      }
    }
  }

  art.tables.emplace_back("lambda_sweep.csv", std::move(summary));
  art.tables.emplace_back("lambda_sweep_reps.csv", std::move(per_rep));
  art.tables.emplace_back("lambda_sweep_table.csv", std::move(wide));
  art.tables.emplace_back("lambda_sweep_long.csv", std::move(long_table));
  return art;
}

// ---- pipeline ---------------------------------------------------------------

const char* ToString(Method method) {
  switch (method) {
    case Method::kErm: return "erm";
    case Method::kPlainContrastive: return "plain_contrastive";
    case Method::kSinglePoint: return "single_point";
    case Method::kDiga: return "diga";
  }
  return "?";
}

Method ParseMethod(const std::string& text) {
  for (Method m : AllMethods()) {
    if (text == ToString(m)) return m;
  }
  throw ConfigError(fmt::format("unknown method '{}'", text));
}

std::vector<Method> AllMethods() {
  return {Method::kErm, Method::kPlainContrastive, Method::kSinglePoint, Method::kDiga};
}

RepData MakeRepData(const ExperimentConfig& cfg, std::uint32_t rep) {
  const WorldSpec world = WorldFor(cfg);
  return RepData{SampleDataset(world, rep, StreamDomain::kTrainData),
                 SampleBalanced(world, cfg.eval_per_group, rep)};
}

DirectionStage LearnDirection(const ExperimentConfig& cfg, const Dataset& train,
                              std::uint32_t rep) {
  DirectionStage stage;
  DirectionInfo& info = stage.info;
  try {
    const std::vector<RegressionConfig> regs = {cfg.Regression(cfg.lambda1),
                                                cfg.Regression(cfg.lambda2)};
    const std::vector<FittedDirection> fits = FitPath(train, regs);
    const SubspaceMap& map = train.subspace_map();
    info.beta_clf1 = fits[0].beta_clf.value_or(kNaN);
    info.beta_clf2 = fits[1].beta_clf.value_or(kNaN);
    for (const FittedDirection& f : fits) {
      if (!f.converged) {
        info.warnings.push_back(fmt::format("rep {}: fit at lambda {} did not converge", rep,
                                            Num(f.lambda)));
      }
    }

    std::optional<CombinedDirection> analytic;
    std::string analytic_error;
    try {
      analytic = CombineAnalytic(fits[0], fits[1], map);
    } catch (const DegenerateCombination& e) {
      analytic_error = e.what();
    }
    if (analytic) info.implied_ratio = ImpliedGridRatio(*analytic, fits[0].w, fits[1].w);

    if (cfg.combine_mode == CombineMode::kAnalytic) {
      if (!analytic) throw DegenerateCombination(analytic_error);
      stage.combined = *analytic;
      info.chosen_ratio = info.implied_ratio;
    } else {
      if (!analytic) info.implied_ratio = kNaN;
      GridSearchConfig grid = cfg.grid;
      grid.repetition = rep;
      GridSearchResult result = GridSearch(fits[0].w, fits[1].w, grid, train,
                                           OracleModel::BayesTarget(map));
      stage.combined = std::move(result.best);
      info.chosen_ratio = result.best_ratio;
      info.trace = std::move(result.trace);
      for (auto& w : result.warnings) info.warnings.push_back(fmt::format("rep {}: {}", rep, w));
    }
    info.c1 = stage.combined.c1;
    info.c2 = stage.combined.c2;
    info.residual = StableResidual(stage.combined.n_cmb, map);

    if (cfg.augment.calibrate) {
      stage.alpha = CalibrateRange(train, stage.combined.n_cmb, cfg.augment.coverage, 0);
    } else {
      stage.alpha = {cfg.augment.alpha_l, cfg.augment.alpha_u};
    }
    info.alpha_l = stage.alpha.alpha_l;
    info.alpha_u = stage.alpha.alpha_u;
    info.ok = true;
  } catch (const std::exception& e) {
    info.ok = false;
    info.error = e.what();
  }
  return stage;
}

EncoderState TrainArm(const ExperimentConfig& cfg, Method method, const Dataset& train,
                      const DirectionStage& direction, std::uint32_t rep) {
  if (method == Method::kErm) throw InvalidArgument("erm has no encoder");
  AugmentConfig aug;
  aug.noise_std = cfg.augment.noise_std.value_or(cfg.augment.noise_scale * train.spec().sigma_y);
  aug.integer_degrees = cfg.augment.integer_degrees;
  aug.seed = cfg.seed;
  aug.repetition = rep;
  Eigen::VectorXd n_cmb;
  if (method == Method::kPlainContrastive) {
    // Views differ by noise only; the direction is never read.
    aug.generative = false;
    aug.alpha_l = 0.0;
    aug.alpha_u = 0.0;
    aug.integer_degrees = false;
    n_cmb = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(train.dim()), 0);
  } else {
    if (!direction.info.ok) throw InvalidArgument("direction stage failed");
    n_cmb = direction.combined.n_cmb;
    aug.alpha_l = direction.alpha.alpha_l;
    aug.alpha_u = direction.alpha.alpha_u;
    if (method == Method::kSinglePoint) {
      const double point = cfg.augment.single_point == "alpha_l" ? aug.alpha_l : aug.alpha_u;
      aug.alpha_l = aug.alpha_u = point;
    }
  }
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.seed;
  train_cfg.repetition = rep;
  return TrainEncoder(train, n_cmb, aug, cfg.Encoder(), train_cfg);
}

ArmResult EvaluateArm(const ExperimentConfig& cfg, Method method,
                      const EncoderState* state, const RepData& data,
                      const std::vector<bool>& mask) {
  if ((method == Method::kErm) != (state == nullptr)) {
    throw InvalidArgument("erm probes raw latents; contrastive arms need an encoder");
  }
  const ProbeConfig& probe_cfg = state ? cfg.probe : cfg.erm_probe;
  const RowMatrix eval_features = state ? EncodeAll(*state, data.eval.z()) : data.eval.z();

  const LinearProbe target = TrainProbe(state, data.train, data.train.y(), mask, probe_cfg);
  const std::vector<int> pred = target.PredictAll(eval_features);
  const std::vector<PredictionRecord> records =
      MakeRecords(data.eval.y(), pred, data.eval.s_flat(), data.eval.num_spurious());

  ArmResult arm;
  arm.method = method;
  arm.report = Evaluate(records);
  const LinearProbe spurious = SpuriousProbe(state, data.train, 0, probe_cfg);
  arm.spurious_acc = ProbeAccuracy(spurious, eval_features, data.eval.spurious_labels(0));
  arm.ok = true;
  return arm;
}

PipelineRep RunPipelineRep(const ExperimentConfig& cfg, std::uint32_t rep,
                           std::span<const Method> methods) {
  PipelineRep out;
  const RepData data = MakeRepData(cfg, rep);
  DirectionStage direction;
  if (NeedsDirection(methods)) {
    direction = LearnDirection(cfg, data.train, rep);
  } else {
    direction.info.error = "not requested";
  }
  out.direction = direction.info;
  for (Method m : methods) out.arms.push_back(RunArm(cfg, m, data, direction, {}, rep));
  return out;
}

ArmSummary PipelineResult::Summary(Method method) const {
  std::vector<const ArmResult*> arms;
  for (const PipelineRep& rep : reps) {
    for (const ArmResult& a : rep.arms) {
      if (a.method == method) arms.push_back(&a);
    }
  }
  return SummarizeArms(arms);
}

PipelineResult RunPipeline(const ExperimentConfig& cfg, std::span<const Method> methods,
                           std::size_t jobs) {
  cfg.Validate();
  PipelineResult out;
  out.methods.assign(methods.begin(), methods.end());
  out.reps.resize(cfg.repetitions);
  ParallelFor(cfg.repetitions, jobs, [&](std::size_t r) {
    out.reps[r] = RunPipelineRep(cfg, static_cast<std::uint32_t>(r), methods);
  });
  return out;
}

RunArtifacts PipelineResult::Artifacts(const std::string& prefix) const {
  RunArtifacts art;
  CsvTable rep_table({"method", "rep", "acc", "wst", "eo", "spurious_acc", "status"});
  CsvTable long_table({"method", "rep", "metric", "value"});
  CsvTable summary(SummaryHeader({"method"}));
  CsvTable directions(DirectionHeader({"rep"}));
  CsvTable trace({"rep", "ratio", "score", "degree", "skipped"});
  Json reports = Json::array();

  const bool has_direction = NeedsDirection(methods);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const PipelineRep& rep = reps[r];
    if (has_direction) {
      AddDirectionRow(directions, {Num(r)}, rep.direction);
      for (const GridPoint& p : rep.direction.trace) {
        trace.AddRow({Num(r), Num(p.ratio), Num(p.score), Num(p.degree), p.skipped ? "1" : "0"});
      }
      art.warnings.insert(art.warnings.end(), rep.direction.warnings.begin(),
                          rep.direction.warnings.end());
    }
    for (const ArmResult& a : rep.arms) {
      std::vector<std::string> row = {ToString(a.method), Num(r)};
      for (const auto& m : MetricNames()) {
        const double v = Metric(a, m);
        row.push_back(Num(v));
        long_table.AddRow({ToString(a.method), Num(r), m, Num(v)});
      }
      row.push_back(ArmStatus(a));
      rep_table.AddRow(std::move(row));
      if (!a.ok) {
        art.errors.push_back(fmt::format("rep {} {}: {}", r, ToString(a.method), a.error));
      } else {
        for (const auto& w : a.report.warnings) {
          art.warnings.push_back(fmt::format("rep {} {}: {}", r, ToString(a.method), w));
        }
        Json j = ToJson(a.report);
        j["method"] = ToString(a.method);
        j["rep"] = r;
        j["spurious_acc"] = a.spurious_acc;
        reports.push_back(std::move(j));
      }
    }
  }
  Json means = Json::object();
  for (Method m : methods) {
    const ArmSummary s = Summary(m);
    std::vector<std::string> row = {ToString(m)};
    AppendSummary(row, s);
    summary.AddRow(std::move(row));
    means[ToString(m)] = {{"acc", s.acc.mean}, {"wst", s.wst.mean}, {"eo", s.eo.mean},
                          {"spurious_acc", s.spurious_acc.mean}, {"reps", s.acc.count}};
  }
  art.values["summary"] = means;
  art.values["reports"] = reports;

  auto has = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  if (has(Method::kErm) && has(Method::kDiga)) {
    const ArmSummary erm = Summary(Method::kErm), diga = Summary(Method::kDiga);
    art.checks.push_back({"eo_halved", diga.eo.mean <= 0.5 * erm.eo.mean,
                          fmt::format("eo diga {} erm {}", Brief(diga.eo.mean), Brief(erm.eo.mean))});
    art.checks.push_back({"wst_gain", diga.wst.mean >= erm.wst.mean + 0.05,
                          fmt::format("wst diga {} erm {}", Brief(diga.wst.mean),
                                      Brief(erm.wst.mean))});
    art.checks.push_back({"acc_kept", diga.acc.mean >= erm.acc.mean - 0.02,
                          fmt::format("acc diga {} erm {}", Brief(diga.acc.mean),
                                      Brief(erm.acc.mean))});
    art.checks.push_back(
        {"spurious_removed", diga.spurious_acc.mean <= erm.spurious_acc.mean - 0.15,
         fmt::format("spurious probe diga {} raw {}", Brief(diga.spurious_acc.mean),
                     Brief(erm.spurious_acc.mean))});
  }
  if (has(Method::kSinglePoint) && has(Method::kDiga)) {
    const double sp = Summary(Method::kSinglePoint).eo.mean, dg = Summary(Method::kDiga).eo.mean;
    art.checks.push_back({"diga_vs_single_point", dg <= sp,
                          fmt::format("eo diga {} single_point {}", Brief(dg), Brief(sp))});
  }

  art.tables.emplace_back(prefix + "_reps.csv", std::move(rep_table));
  art.tables.emplace_back(prefix + "_summary.csv", std::move(summary));
  if (has_direction) {
    art.tables.emplace_back(prefix + "_directions.csv", std::move(directions));
    art.tables.emplace_back(prefix + "_grid_trace.csv", std::move(trace));
  }
  art.tables.emplace_back(prefix + "_long.csv", std::move(long_table));
  return art;
}

// ---- sweeps -----------------------------------------------------------------

BiasSweepResult RunBiasSweep(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.Validate();
  if (cfg.betas.empty()) throw ConfigError("bias sweep needs at least one beta");
  const std::vector<Method> methods = {Method::kErm, Method::kDiga};
  BiasSweepResult out;
  out.betas = cfg.betas;
  std::vector<ExperimentConfig> cfgs;
  for (double beta : cfg.betas) {
    ExperimentConfig c = cfg;
    c.world.spurious_blocks.at(0).bias = beta;
    c.Validate();
    cfgs.push_back(std::move(c));
    PipelineResult run;
    run.methods = methods;
    run.reps.resize(cfg.repetitions);
    out.runs.push_back(std::move(run));
  }
  const std::size_t nr = cfg.repetitions;
  ParallelFor(cfgs.size() * nr, jobs, [&](std::size_t task) {
    const std::size_t b = task / nr;
    out.runs[b].reps[task % nr] =
        RunPipelineRep(cfgs[b], static_cast<std::uint32_t>(task % nr), methods);
  });
  return out;
}

RunArtifacts BiasSweepResult::Artifacts() const {
  RunArtifacts art;
  CsvTable summary(SummaryHeader({"beta", "method"}));
  CsvTable rep_table({"beta", "method", "rep", "acc", "wst", "eo", "spurious_acc", "status"});
  CsvTable long_table({"beta", "method", "rep", "metric", "value"});
  std::vector<double> erm_eo, diga_eo;
  Json values = Json::array();
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const PipelineResult& run = runs[b];
    for (Method m : run.methods) {
      const ArmSummary s = run.Summary(m);
      std::vector<std::string> row = {Num(betas[b]), ToString(m)};
      AppendSummary(row, s);
      summary.AddRow(std::move(row));
      (m == Method::kErm ? erm_eo : diga_eo).push_back(s.eo.mean);
      values.push_back({{"beta", betas[b]}, {"method", ToString(m)}, {"acc", s.acc.mean},
                        {"wst", s.wst.mean}, {"eo", s.eo.mean}});
    }
    for (std::size_t r = 0; r < run.reps.size(); ++r) {
      for (const ArmResult& a : run.reps[r].arms) {
        std::vector<std::string> row = {Num(betas[b]), ToString(a.method), Num(r)};
        for (const auto& m : MetricNames()) {
          row.push_back(Num(Metric(a, m)));
          long_table.AddRow({Num(betas[b]), ToString(a.method), Num(r), m, Num(Metric(a, m))});
        }
        row.push_back(ArmStatus(a));
        rep_table.AddRow(std::move(row));
        if (!a.ok) {
          art.errors.push_back(fmt::format("beta {} rep {} {}: {}", Num(betas[b]), r,
                                           ToString(a.method), a.error));
        }
      }
      const auto& w = run.reps[r].direction.warnings;
      art.warnings.insert(art.warnings.end(), w.begin(), w.end());
    }
  }
  art.values["cells"] = values;

  auto index_of = [&](double beta) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < betas.size(); ++i) {
      if (Near(betas[i], beta)) return i;
    }
    return std::nullopt;
  };
  auto gap = [&](std::size_t i) { return erm_eo[i] - diga_eo[i]; };
  if (auto lo = index_of(0.75), hi = index_of(0.95); lo && hi) {
    art.checks.push_back({"widening_gap", gap(*hi) >= gap(*lo),
                          fmt::format("eo gap {} at 0.95, {} at 0.75", Brief(gap(*hi)),
                                      Brief(gap(*lo)))});
  }
  std::vector<std::size_t> order(betas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return betas[a] < betas[b]; });
  bool monotone = true;
  for (std::size_t k = 1; k < order.size(); ++k) {
    monotone = monotone && erm_eo[order[k]] >= erm_eo[order[k - 1]];
  }
  art.checks.push_back({"erm_eo_monotone", monotone, "erm eo nondecreasing in beta"});
  const double erm_slope = Slope(betas, erm_eo), diga_slope = Slope(betas, diga_eo);
  art.checks.push_back({"slope_ordering", diga_slope <= erm_slope,
                        fmt::format("eo slope diga {} erm {}", Brief(diga_slope), Brief(erm_slope))});
  if (auto u = index_of(0.5)) {
    art.checks.push_back({"unbiased_gap", std::abs(gap(*u)) <= 0.03,
                          fmt::format("eo gap {} at beta 0.5", Brief(gap(*u)))});
  }

  art.tables.emplace_back("bias_sweep.csv", std::move(summary));
  art.tables.emplace_back("bias_sweep_reps.csv", std::move(rep_table));
  art.tables.emplace_back("bias_sweep_long.csv", std::move(long_table));
  return art;
}

LabelSweepResult RunLabelSweep(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.Validate();
  if (cfg.label_ratios.empty()) throw ConfigError("label sweep needs at least one ratio");
  LabelSweepResult out;
  out.ratios = cfg.label_ratios;
  out.reps = cfg.repetitions;
  const std::size_t nq = out.ratios.size();
  const std::vector<Method> methods = {Method::kErm, Method::kDiga};
  out.rows.resize(cfg.repetitions * nq * methods.size());
  out.directions.resize(cfg.repetitions);
  ParallelFor(cfg.repetitions, jobs, [&](std::size_t r) {
    const auto rep = static_cast<std::uint32_t>(r);
    const RepData data = MakeRepData(cfg, rep);
    const DirectionStage direction = LearnDirection(cfg, data.train, rep);
    out.directions[r] = direction.info;
    // The encoder never sees labels, so one training serves every ratio.
    std::optional<EncoderState> encoder;
    std::string encoder_error = direction.info.ok ? "" : "direction stage failed: " + direction.info.error;
    if (direction.info.ok) {
      try {
        encoder = TrainArm(cfg, Method::kDiga, data.train, direction, rep);
      } catch (const std::exception& e) {
        encoder_error = e.what();
      }
    }
    for (std::size_t q = 0; q < nq; ++q) {
      const double ratio = out.ratios[q];
      for (std::size_t k = 0; k < methods.size(); ++k) {
        LabelSweepRow& row = out.rows[(r * nq + q) * methods.size() + k];
        row.ratio = ratio;
        row.method = methods[k];
        row.rep = rep;
        try {
          const std::vector<bool> mask = MakeLabelMask(data.train.size(), ratio, cfg.seed, rep);
          if (methods[k] == Method::kErm) {
            row.arm = EvaluateArm(cfg, methods[k], nullptr, data, mask);
          } else if (encoder) {
            row.arm = EvaluateArm(cfg, methods[k], &*encoder, data, mask);
          } else {
            row.arm = FailedArm(methods[k], encoder_error);
          }
        } catch (const std::exception& e) {
          row.arm = FailedArm(methods[k], e.what());
        }
      }
    }
  });
  return out;
}

ArmSummary LabelSweepResult::Summary(double ratio, Method method) const {
  std::vector<const ArmResult*> arms;
  for (const LabelSweepRow& row : rows) {
    if (Near(row.ratio, ratio) && row.method == method) arms.push_back(&row.arm);
  }
  return SummarizeArms(arms);
}

RunArtifacts LabelSweepResult::Artifacts() const {
  RunArtifacts art;
  CsvTable summary(SummaryHeader({"ratio", "method"}));
  CsvTable rep_table({"ratio", "method", "rep", "acc", "wst", "eo", "spurious_acc", "status"});
  CsvTable long_table({"ratio", "method", "rep", "metric", "value"});
  CsvTable directions(DirectionHeader({"rep"}));
  for (std::size_t r = 0; r < this->directions.size(); ++r) {
    AddDirectionRow(directions, {Num(r)}, this->directions[r]);
    art.warnings.insert(art.warnings.end(), this->directions[r].warnings.begin(),
                        this->directions[r].warnings.end());
  }
  Json values = Json::array();
  for (double ratio : ratios) {
    for (Method m : {Method::kErm, Method::kDiga}) {
      const ArmSummary s = Summary(ratio, m);
      std::vector<std::string> row = {Num(ratio), ToString(m)};
      AppendSummary(row, s);
      summary.AddRow(std::move(row));
      values.push_back({{"ratio", ratio}, {"method", ToString(m)}, {"acc", s.acc.mean},
                        {"wst", s.wst.mean}, {"eo", s.eo.mean}});
    }
  }
  for (const LabelSweepRow& row : rows) {
    std::vector<std::string> out_row = {Num(row.ratio), ToString(row.method), Num(row.rep)};
    for (const auto& m : MetricNames()) {
      out_row.push_back(Num(Metric(row.arm, m)));
      long_table.AddRow({Num(row.ratio), ToString(row.method), Num(row.rep), m,
                         Num(Metric(row.arm, m))});
    }
    out_row.push_back(ArmStatus(row.arm));
    rep_table.AddRow(std::move(out_row));
    if (!row.arm.ok) {
      art.errors.push_back(fmt::format("ratio {} rep {} {}: {}", Num(row.ratio), row.rep,
                                       ToString(row.method), row.arm.error));
    }
  }
  art.values["cells"] = values;

  const auto full = std::find_if(ratios.begin(), ratios.end(), [](double q) { return Near(q, 1.0); });
  const auto lowest = std::min_element(ratios.begin(), ratios.end());
  if (full != ratios.end() && lowest != ratios.end() && *lowest < 1.0) {
    const double eo_full = Summary(1.0, Method::kDiga).eo.mean;
    const double eo_low = Summary(*lowest, Method::kDiga).eo.mean;
    art.checks.push_back({"diga_eo_robust", eo_low - eo_full <= 0.05,
                          fmt::format("diga eo {} at ratio {}, {} at 1", Brief(eo_low),
                                      Num(*lowest), Brief(eo_full))});
    const double wst_full = Summary(1.0, Method::kErm).wst.mean;
    const double wst_low = Summary(*lowest, Method::kErm).wst.mean;
    art.checks.push_back({"erm_wst_degrades", wst_low <= wst_full,
                          fmt::format("erm wst {} at ratio {}, {} at 1", Brief(wst_low),
                                      Num(*lowest), Brief(wst_full))});
  }

  art.tables.emplace_back("label_sweep.csv", std::move(summary));
  art.tables.emplace_back("label_sweep_reps.csv", std::move(rep_table));
  art.tables.emplace_back("label_sweep_directions.csv", std::move(directions));
  art.tables.emplace_back("label_sweep_long.csv", std::move(long_table));
  return art;
}

LambdaPairResult RunLambdaPairAblation(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.Validate();
  if (cfg.lambda_pairs.empty()) throw ConfigError("lambda-pair ablation needs at least one pair");
  LambdaPairResult out;
  out.pairs = cfg.lambda_pairs;
  out.reps = cfg.repetitions;
  const std::size_t nr = cfg.repetitions;
  out.rows.resize(out.pairs.size() * nr);
  const std::vector<Method> methods = {Method::kDiga};
  ParallelFor(out.rows.size(), jobs, [&](std::size_t task) {
    ExperimentConfig c = cfg;
    std::tie(c.lambda1, c.lambda2) = out.pairs[task / nr];
    LambdaPairRow& row = out.rows[task];
    row.lambda1 = c.lambda1;
    row.lambda2 = c.lambda2;
    row.rep = static_cast<std::uint32_t>(task % nr);
    // Equal pairs bypass the main-config ordering rule on purpose: they must
    // reach the combiner and surface its degeneracy error.
    PipelineRep rep = RunPipelineRep(c, row.rep, methods);
    row.direction = std::move(rep.direction);
    row.arm = std::move(rep.arms.front());
  });
  return out;
}

ArmSummary LambdaPairResult::Summary(std::size_t pair) const {
  std::vector<const ArmResult*> arms;
  for (std::size_t r = 0; r < reps; ++r) arms.push_back(&rows[pair * reps + r].arm);
  return SummarizeArms(arms);
}

RunArtifacts LambdaPairResult::Artifacts() const {
  RunArtifacts art;
  CsvTable summary(SummaryHeader({"lambda1", "lambda2"}));
  CsvTable rep_table({"lambda1", "lambda2", "rep", "acc", "wst", "eo", "spurious_acc", "status"});
  CsvTable long_table({"lambda1", "lambda2", "rep", "metric", "value"});
  CsvTable directions(DirectionHeader({"lambda1", "lambda2", "rep"}));
  Json values = Json::array();
  std::vector<double> stable_eo;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [l1, l2] = pairs[p];
    const ArmSummary s = Summary(p);
    std::vector<std::string> row = {Num(l1), Num(l2)};
    AppendSummary(row, s);
    summary.AddRow(std::move(row));
    values.push_back({{"lambda1", l1}, {"lambda2", l2}, {"acc", s.acc.mean},
                      {"wst", s.wst.mean}, {"eo", s.eo.mean}, {"ok_reps", s.eo.count}});
    if (l2 >= 1e4 * l1 && s.eo.count == reps) stable_eo.push_back(s.eo.mean);
  }
  for (const LambdaPairRow& row : rows) {
    const std::vector<std::string> key = {Num(row.lambda1), Num(row.lambda2), Num(row.rep)};
    AddDirectionRow(directions, key, row.direction);
    std::vector<std::string> out_row = key;
    for (const auto& m : MetricNames()) {
      out_row.push_back(Num(Metric(row.arm, m)));
      long_table.AddRow({key[0], key[1], key[2], m, Num(Metric(row.arm, m))});
    }
    out_row.push_back(ArmStatus(row.arm));
    rep_table.AddRow(std::move(out_row));
    if (!row.arm.ok) {
      art.errors.push_back(fmt::format("pair ({}, {}) rep {}: {}", key[0], key[1], row.rep,
                                       row.arm.error));
    }
    art.warnings.insert(art.warnings.end(), row.direction.warnings.begin(),
                        row.direction.warnings.end());
  }
  art.values["cells"] = values;
  if (stable_eo.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(stable_eo.begin(), stable_eo.end());
    art.checks.push_back({"eo_stability", *hi - *lo <= 0.03,
                          fmt::format("eo span {} over {} pairs with lambda2/lambda1 >= 1e4",
                                      Brief(*hi - *lo), stable_eo.size())});
  }
  art.tables.emplace_back("lambda_pair.csv", std::move(summary));
  art.tables.emplace_back("lambda_pair_reps.csv", std::move(rep_table));
  art.tables.emplace_back("lambda_pair_directions.csv", std::move(directions));
  art.tables.emplace_back("lambda_pair_long.csv", std::move(long_table));
  return art;
}

RunArtifacts GenerateData(const ExperimentConfig& cfg, std::size_t jobs,
                          const std::filesystem::path& out_dir) {
  cfg.Validate();
  RunArtifacts art;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
  CsvTable index({"rep", "split", "file", "rows"});
  std::vector<std::array<std::size_t, 2>> rows(cfg.repetitions);
  ParallelFor(cfg.repetitions, jobs, [&](std::size_t r) {
    const RepData data = MakeRepData(cfg, static_cast<std::uint32_t>(r));
    for (int split = 0; split < 2; ++split) {
      const Dataset& d = split == 0 ? data.train : data.eval;
      const auto path = out_dir / fmt::format("{}_rep{}.csv", split == 0 ? "train" : "eval", r);
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(fmt::format("cannot write {}", path.string()));
      WriteDatasetCsv(d, out);
      if (!out) throw Error(fmt::format("write failed for {}", path.string()));
      rows[r][split] = d.size();
    }
  });
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    index.AddRow({Num(r), "train", fmt::format("train_rep{}.csv", r), Num(rows[r][0])});
    index.AddRow({Num(r), "eval", fmt::format("eval_rep{}.csv", r), Num(rows[r][1])});
  }
  art.values["world"] = ToJson(WorldFor(cfg));
  art.tables.emplace_back("datasets.csv", std::move(index));
  return art;
}

}  // namespace fairlatent::harness
