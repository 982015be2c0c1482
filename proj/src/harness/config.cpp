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


#include "fairlatent/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "fairlatent/error.hpp"

namespace fairlatent::harness {
namespace {

// Reads keys of one JSON object and rejects any key that was never asked for.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", Where()));
  }

  bool Has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void Get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", path_, key, e.what()));
    }
  }

  template <typename T>
  void GetOptional(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T value{};
    Get(key, value);
    out = value;
  }

  // Marks a key as known and returns its sub-object, or null when absent.
  const Json* Child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string ChildPath(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void Finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", Where(), item.key()));
      }
    }
  }

 private:
  std::string Where() const { return path_.empty() ? "config" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void WithSection(Section& parent, const std::string& key, Fn&& fn) {
  if (const Json* child = parent.Child(key)) {
    Section s(*child, parent.ChildPath(key));
    fn(s);
    s.Finish();
  }
}

void ParseWorld(Section& s, WorldSpec& world) {
  s.Get("d", world.d);
  s.Get("n", world.n);
  s.Get("sigma_y", world.sigma_y);
  // Shorthand for the usual single spurious block of size d.
  std::optional<double> bias, sigma_s;
  s.GetOptional("bias", bias);
  s.GetOptional("sigma_s", sigma_s);
  const Json* blocks = s.Child("spurious_blocks");
  if (blocks != nullptr) {
    if (bias || sigma_s) {
      throw ConfigError("world: give either spurious_blocks or bias/sigma_s, not both");
    }
    if (!blocks->is_array()) throw ConfigError("world.spurious_blocks: expected a list");
    world.spurious_blocks.clear();
    for (std::size_t i = 0; i < blocks->size(); ++i) {
      Section b((*blocks)[i], fmt::format("world.spurious_blocks[{}]", i));
      SpuriousBlock block;
      b.Get("dim", block.dim);
      b.Get("sigma", block.sigma);
      b.Get("bias", block.bias);
      b.Finish();
      world.spurious_blocks.push_back(block);
    }
  } else {
    SpuriousBlock block{world.d, sigma_s.value_or(world.spurious_blocks.front().sigma),
                        bias.value_or(world.spurious_blocks.front().bias)};
    world.spurious_blocks = {block};
  }
}

Json ProbeJson(const ProbeConfig& p) {
  return {{"ridge", p.ridge},
          {"normalize_features", p.normalize_features},
          {"tol", p.tol},
          {"max_iters", p.max_iters}};
}

void ParseProbe(Section& s, ProbeConfig& p) {
  s.Get("ridge", p.ridge);
  s.Get("normalize_features", p.normalize_features);
  s.Get("tol", p.tol);
  s.Get("max_iters", p.max_iters);
}

}  // namespace

std::string LambdaSweepCell::Label() const {
  return fmt::format("{}:1/{}/{}", ratio, sigma_y, sigma_s);
}

std::vector<LambdaSweepCell> LambdaSweepSection::DefaultCells() {
  std::vector<LambdaSweepCell> cells;
  for (int ratio = 2; ratio <= 14; ++ratio) {
    for (double sy : {0.1, 1.0}) {
      for (double ss : {0.1, 1.0}) cells.push_back({static_cast<double>(ratio), sy, ss});
    }
  }
  return cells;
}

RegressionConfig ExperimentConfig::Regression(double lambda) const {
  RegressionConfig r = regression;
  r.lambda = lambda;
  return r;
}

EncoderSpec ExperimentConfig::Encoder() const {
  EncoderSpec spec;
  spec.layer_dims = {world.latent_dim()};
  spec.layer_dims.insert(spec.layer_dims.end(), encoder_dims.begin(), encoder_dims.end());
  spec.activation = activation;
  if (!predictor_dims.empty()) {
    spec.predictor_dims = {encoder_dims.back()};
    spec.predictor_dims.insert(spec.predictor_dims.end(), predictor_dims.begin(),
                               predictor_dims.end());
  }
  spec.init = init;
  spec.bias = encoder_bias;
  return spec;
}

void ExperimentConfig::Validate() const {
  try {
    world.Validate();
    regression.Validate();
    Regression(lambda1).Validate();
    Regression(lambda2).Validate();
    grid.Validate();
    Encoder().Validate();
    train.Validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!(lambda1 < lambda2)) {
    throw ConfigError(fmt::format(
        "regression: lambda1 ({}) must be smaller than lambda2 ({})", lambda1, lambda2));
  }
  if (!(augment.coverage > 0.0 && augment.coverage <= 1.0)) {
    throw ConfigError("augment.coverage must lie in (0, 1]");
  }
  if (!augment.calibrate &&
      !(augment.alpha_l > 0.0 && augment.alpha_l <= augment.alpha_u)) {
    throw ConfigError("augment: need 0 < alpha_l <= alpha_u");
  }
  if (augment.noise_std && !(*augment.noise_std >= 0.0)) {
    throw ConfigError("augment.noise_std must be >= 0");
  }
  if (!(augment.noise_scale >= 0.0)) throw ConfigError("augment.noise_scale must be >= 0");
  if (augment.single_point != "alpha_u" && augment.single_point != "alpha_l") {
    throw ConfigError("augment.single_point must be \"alpha_u\" or \"alpha_l\"");
  }
  for (const ProbeConfig* p : {&probe, &erm_probe}) {
    if (!(p->ridge >= 0.0) || !(p->tol > 0.0) || p->max_iters == 0) {
      throw ConfigError("probe: ridge must be >= 0, tol > 0 and max_iters >= 1");
    }
  }
  if (eval_per_group == 0) throw ConfigError("eval.per_group must be >= 1");
  if (repetitions == 0) throw ConfigError("repetitions must be >= 1");
  if (repetitions > kMaxRepetitions) throw ConfigError("repetitions exceed 2^24");
  if (lambda_sweep.lambdas.empty() || lambda_sweep.cells.empty()) {
    throw ConfigError("lambda_sweep: lambdas and cells must be nonempty");
  }
  for (double l : lambda_sweep.lambdas) {
    if (!(l >= 0.0)) throw ConfigError("lambda_sweep: lambdas must be >= 0");
  }
  for (const auto& c : lambda_sweep.cells) {
    if (!(c.ratio >= 1.0) || !(c.sigma_y > 0.0) || !(c.sigma_s > 0.0)) {
      throw ConfigError("lambda_sweep: cells need ratio >= 1 and positive sigmas");
    }
  }
  for (double b : betas) {
    if (!(b >= 0.5 && b < 1.0)) throw ConfigError("bias_sweep: betas must lie in [0.5, 1)");
  }
  for (double r : label_ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("label_sweep: ratios must lie in (0, 1]");
  }
  for (const auto& [l1, l2] : lambda_pairs) {
    if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw ConfigError("lambda_pairs: lambdas must be >= 0");
    if (l1 > l2) {
      throw ConfigError(fmt::format(
          "lambda_pairs: pair ({}, {}) has lambda1 > lambda2", l1, l2));
    }
  }
}

ExperimentConfig ParseConfig(const Json& j) {
  ExperimentConfig cfg;
  Section root(j, "");
  root.Get("seed", cfg.seed);
  root.Get("repetitions", cfg.repetitions);
  root.Get("output_dir", cfg.output_dir);
  WithSection(root, "world", [&](Section& s) { ParseWorld(s, cfg.world); });
  WithSection(root, "regression", [&](Section& s) {
    std::string convention = ToString(cfg.regression.convention);
    s.Get("convention", convention);
    try {
      cfg.regression.convention = ParseLossConvention(convention);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("regression.convention: ") + e.what());
    }
    s.Get("lambda1", cfg.lambda1);
    s.Get("lambda2", cfg.lambda2);
    s.Get("intercept", cfg.regression.intercept);
    s.Get("tol", cfg.regression.tol);
    s.Get("max_iters", cfg.regression.max_iters);
  });
  WithSection(root, "combiner", [&](Section& s) {
    std::string mode = cfg.combine_mode == CombineMode::kAnalytic ? "analytic" : "grid";
    s.Get("mode", mode);
    if (mode == "analytic") {
      cfg.combine_mode = CombineMode::kAnalytic;
    } else if (mode == "grid") {
      cfg.combine_mode = CombineMode::kGrid;
    } else {
      throw ConfigError(fmt::format("combiner.mode: unknown mode '{}'", mode));
    }
    s.Get("ratio_grid", cfg.grid.ratio_grid);
    s.Get("probe_count", cfg.grid.probe_count);
    s.GetOptional("edit_degree", cfg.grid.edit_degree);
    s.Get("coverage", cfg.grid.coverage);
  });
  WithSection(root, "augment", [&](Section& s) {
    s.Get("calibrate", cfg.augment.calibrate);
    s.Get("coverage", cfg.augment.coverage);
    s.Get("alpha_l", cfg.augment.alpha_l);
    s.Get("alpha_u", cfg.augment.alpha_u);
    s.Get("integer_degrees", cfg.augment.integer_degrees);
    s.GetOptional("noise_std", cfg.augment.noise_std);
    s.Get("noise_scale", cfg.augment.noise_scale);
    s.Get("single_point", cfg.augment.single_point);
  });
  WithSection(root, "encoder", [&](Section& s) {
    s.Get("dims", cfg.encoder_dims);
    s.Get("predictor_dims", cfg.predictor_dims);
    std::string activation = ToString(cfg.activation);
    std::string init = ToString(cfg.init);
    s.Get("activation", activation);
    s.Get("init", init);
    try {
      cfg.activation = ParseActivation(activation);
      cfg.init = ParseInitScheme(init);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("encoder: ") + e.what());
    }
    s.Get("bias", cfg.encoder_bias);
    if (cfg.encoder_dims.empty()) throw ConfigError("encoder.dims must be nonempty");
  });
  WithSection(root, "train", [&](Section& s) {
    s.Get("epochs", cfg.train.epochs);
    s.Get("batch_size", cfg.train.batch_size);
    s.Get("learning_rate", cfg.train.learning_rate);
    s.Get("momentum", cfg.train.momentum);
  });
  WithSection(root, "probe", [&](Section& s) { ParseProbe(s, cfg.probe); });
  WithSection(root, "erm_probe", [&](Section& s) { ParseProbe(s, cfg.erm_probe); });
  WithSection(root, "eval", [&](Section& s) { s.Get("per_group", cfg.eval_per_group); });
  WithSection(root, "lambda_sweep", [&](Section& s) {
    s.Get("d", cfg.lambda_sweep.d);
    s.Get("n", cfg.lambda_sweep.n);
    s.Get("lambdas", cfg.lambda_sweep.lambdas);
    if (const Json* cells = s.Child("cells")) {
      if (!cells->is_array()) throw ConfigError("lambda_sweep.cells: expected a list");
      cfg.lambda_sweep.cells.clear();
      for (std::size_t i = 0; i < cells->size(); ++i) {
        Section c((*cells)[i], fmt::format("lambda_sweep.cells[{}]", i));
        LambdaSweepCell cell;
        c.Get("ratio", cell.ratio);
        c.Get("sigma_y", cell.sigma_y);
        c.Get("sigma_s", cell.sigma_s);
        c.Finish();
        cfg.lambda_sweep.cells.push_back(cell);
      }
    }
  });
  WithSection(root, "bias_sweep", [&](Section& s) { s.Get("betas", cfg.betas); });
  WithSection(root, "label_sweep", [&](Section& s) { s.Get("ratios", cfg.label_ratios); });
  WithSection(root, "lambda_pairs", [&](Section& s) {
    std::vector<std::vector<double>> pairs;
    s.Get("pairs", pairs);
    if (s.Has("pairs")) {
      cfg.lambda_pairs.clear();
      for (const auto& p : pairs) {
        if (p.size() != 2) throw ConfigError("lambda_pairs.pairs: each entry needs two values");
        cfg.lambda_pairs.emplace_back(p[0], p[1]);
      }
    }
  });
  root.Finish();
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  Json j;
  try {
    j = Json::parse(in, nullptr, true, false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return ParseConfig(j);
}

Json CanonicalJson(const ExperimentConfig& cfg) {
  Json world = ToJson(cfg.world);
  world.erase("seed");
  Json pairs = Json::array();
  for (const auto& [a, b] : cfg.lambda_pairs) pairs.push_back({a, b});
  Json cells = Json::array();
  for (const auto& c : cfg.lambda_sweep.cells) {
    cells.push_back({{"ratio", c.ratio}, {"sigma_y", c.sigma_y}, {"sigma_s", c.sigma_s}});
  }
  return {
      {"seed", cfg.seed},
      {"repetitions", cfg.repetitions},
      {"output_dir", cfg.output_dir},
      {"world", world},
      {"regression",
       {{"convention", ToString(cfg.regression.convention)},
        {"lambda1", cfg.lambda1},
        {"lambda2", cfg.lambda2},
        {"intercept", cfg.regression.intercept},
        {"tol", cfg.regression.tol},
        {"max_iters", cfg.regression.max_iters}}},
      {"combiner",
       {{"mode", cfg.combine_mode == CombineMode::kAnalytic ? "analytic" : "grid"},
        {"ratio_grid", cfg.grid.ratio_grid},
        {"probe_count", cfg.grid.probe_count},
        {"edit_degree", cfg.grid.edit_degree ? Json(*cfg.grid.edit_degree) : Json(nullptr)},
        {"coverage", cfg.grid.coverage}}},
      {"augment",
       {{"calibrate", cfg.augment.calibrate},
        {"coverage", cfg.augment.coverage},
        {"alpha_l", cfg.augment.alpha_l},
        {"alpha_u", cfg.augment.alpha_u},
        {"integer_degrees", cfg.augment.integer_degrees},
        {"noise_std", cfg.augment.noise_std ? Json(*cfg.augment.noise_std) : Json(nullptr)},
        {"noise_scale", cfg.augment.noise_scale},
        {"single_point", cfg.augment.single_point}}},
      {"encoder",
       {{"dims", cfg.encoder_dims},
        {"predictor_dims", cfg.predictor_dims},
        {"activation", ToString(cfg.activation)},
        {"init", ToString(cfg.init)},
        {"bias", cfg.encoder_bias}}},
      {"train",
       {{"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.learning_rate},
        {"momentum", cfg.train.momentum}}},
      {"probe", ProbeJson(cfg.probe)},
      {"erm_probe", ProbeJson(cfg.erm_probe)},
      {"eval", {{"per_group", cfg.eval_per_group}}},
      {"lambda_sweep",
       {{"d", cfg.lambda_sweep.d},
        {"n", cfg.lambda_sweep.n},
        {"lambdas", cfg.lambda_sweep.lambdas},
        {"cells", cells}}},
      {"bias_sweep", {{"betas", cfg.betas}}},
      {"label_sweep", {{"ratios", cfg.label_ratios}}},
      {"lambda_pairs", {{"pairs", pairs}}},
  };
}

std::uint64_t ConfigHash(const ExperimentConfig& cfg) {
  const std::string text = CanonicalJson(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string HashHex(std::uint64_t hash) { return fmt::format("{:016x}", hash); }

}  // namespace fairlatent::harness
