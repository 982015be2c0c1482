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


#include "fairlatent/serialization.hpp"

#include <vector>

#include "fairlatent/error.hpp"

namespace fairlatent {
namespace {

Json VectorToJson(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd VectorFromJson(const Json& j) {
  const std::vector<double> values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

// Nested row arrays.
Json MatrixToJson(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd MatrixFromJson(const Json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidArgument("json: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

template <typename T>
Json Optional(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

Json ToJson(const WorldSpec& spec) {
  Json blocks = Json::array();
  for (const SpuriousBlock& b : spec.spurious_blocks) {
    blocks.push_back({{"dim", b.dim}, {"sigma", b.sigma}, {"bias", b.bias}});
  }
  return {{"d", spec.d},
          {"n", spec.n},
          {"sigma_y", spec.sigma_y},
          {"spurious_blocks", blocks},
          {"seed", spec.seed}};
}

WorldSpec WorldSpecFromJson(const Json& j) {
  WorldSpec spec;
  spec.d = j.at("d").get<std::size_t>();
  spec.n = j.at("n").get<std::size_t>();
  spec.sigma_y = j.at("sigma_y").get<double>();
  spec.spurious_blocks.clear();
  for (const Json& b : j.at("spurious_blocks")) {
    spec.spurious_blocks.push_back(
        {b.at("dim").get<std::size_t>(), b.at("sigma").get<double>(), b.at("bias").get<double>()});
  }
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.Validate();
  return spec;
}

Json ToJson(const FittedDirection& dir) {
  return {{"w", VectorToJson(dir.w)},
          {"intercept", dir.intercept},
          {"lambda", dir.lambda},
          {"convention", ToString(dir.convention)},
          {"beta_clf", Optional(dir.beta_clf)},
          {"converged", dir.converged},
          {"final_grad_norm", dir.final_grad_norm},
          {"iterations", dir.iterations}};
}

FittedDirection FittedDirectionFromJson(const Json& j) {
  FittedDirection dir;
  dir.w = VectorFromJson(j.at("w"));
  dir.intercept = j.at("intercept").get<double>();
  dir.lambda = j.at("lambda").get<double>();
  dir.convention = ParseLossConvention(j.at("convention").get<std::string>());
  if (!j.at("beta_clf").is_null()) dir.beta_clf = j.at("beta_clf").get<double>();
  dir.converged = j.at("converged").get<bool>();
  dir.final_grad_norm = j.at("final_grad_norm").get<double>();
  dir.iterations = j.at("iterations").get<std::size_t>();
  return dir;
}

Json ToJson(const CombinedDirection& dir) {
  return {{"c1", dir.c1},
          {"c2", dir.c2},
          {"n_cmb", VectorToJson(dir.n_cmb)},
          {"source", ToString(dir.source)},
          {"consistency", Optional(dir.consistency)},
          {"residual", Optional(dir.residual)},
          {"oriented", dir.oriented}};
}

CombinedDirection CombinedDirectionFromJson(const Json& j) {
  CombinedDirection dir;
  dir.c1 = j.at("c1").get<double>();
  dir.c2 = j.at("c2").get<double>();
  dir.n_cmb = VectorFromJson(j.at("n_cmb"));
  const std::string source = j.at("source").get<std::string>();
  if (source == "analytic") {
    dir.source = CombineSource::kAnalytic;
  } else if (source == "grid_search") {
    dir.source = CombineSource::kGridSearch;
  } else {
    throw InvalidArgument("json: unknown combination source '" + source + "'");
  }
  if (!j.at("consistency").is_null()) dir.consistency = j.at("consistency").get<double>();
  if (!j.at("residual").is_null()) dir.residual = j.at("residual").get<double>();
  dir.oriented = j.at("oriented").get<bool>();
  return dir;
}

Json ToJson(const Mlp& mlp) {
  Json layers = Json::array();
  for (const Layer& layer : mlp.layers()) {
    layers.push_back({{"in", layer.weight.cols()},
                      {"weight", MatrixToJson(layer.weight)},
                      {"bias", VectorToJson(layer.bias)}});
  }
  return {{"activation", ToString(mlp.activation())}, {"layers", layers}};
}

Mlp MlpFromJson(const Json& j) {
  std::vector<Layer> layers;
  for (const Json& l : j.at("layers")) {
    layers.push_back({MatrixFromJson(l.at("weight"), l.at("in").get<Eigen::Index>()),
                      VectorFromJson(l.at("bias"))});
  }
  return Mlp(std::move(layers), ParseActivation(j.at("activation").get<std::string>()));
}

Json ToJson(const EncoderState& state) {
  return {{"online", ToJson(state.online)},
          {"predictor", ToJson(state.predictor)},
          {"target", ToJson(state.target)},
          {"momentum", state.momentum},
          {"step", state.step},
          {"initial_loss", state.initial_loss},
          {"loss_history", state.loss_history}};
}

EncoderState EncoderStateFromJson(const Json& j) {
  EncoderState state;
  state.online = MlpFromJson(j.at("online"));
  state.predictor = MlpFromJson(j.at("predictor"));
  state.target = MlpFromJson(j.at("target"));
  state.momentum = j.at("momentum").get<double>();
  state.step = j.at("step").get<std::size_t>();
  state.initial_loss = j.at("initial_loss").get<double>();
  state.loss_history = j.at("loss_history").get<std::vector<double>>();
  return state;
}

Json ToJson(const LinearProbe& probe) {
  const SoftmaxModel& m = probe.model();
  return {{"classes", m.classes},
          {"weights", MatrixToJson(m.weights)},
          {"bias", VectorToJson(m.bias)},
          {"normalize_features", probe.normalize_features()},
          {"converged", m.converged},
          {"iterations", m.iterations}};
}

LinearProbe LinearProbeFromJson(const Json& j) {
  SoftmaxModel m;
  m.classes = j.at("classes").get<std::vector<int>>();
  m.weights = MatrixFromJson(j.at("weights"), static_cast<Eigen::Index>(m.classes.size()));
  m.bias = VectorFromJson(j.at("bias"));
  m.converged = j.at("converged").get<bool>();
  m.iterations = j.at("iterations").get<std::size_t>();
  if (m.bias.size() != static_cast<Eigen::Index>(m.classes.size()) ||
      m.weights.cols() != m.bias.size()) {
    throw InvalidArgument("json: probe shapes disagree");
  }
  return LinearProbe(std::move(m), j.at("normalize_features").get<bool>());
}

Json ToJson(const FairnessReport& report) {
  Json groups = Json::array();
  for (const GroupStat& g : report.per_group) {
    groups.push_back(
        {{"y", g.y}, {"s", g.s}, {"count", g.count}, {"correct", g.correct}, {"acc", g.accuracy}});
  }
  Json rates = Json::array();
  for (const ConditionalRate& r : report.conditional_rates) {
    rates.push_back({{"s", r.s},
                     {"y", r.y},
                     {"y_hat", r.y_hat},
                     {"hits", r.hits},
                     {"count", r.count},
                     {"rate", r.rate}});
  }
  return {{"count", report.count},
          {"acc", report.accuracy},
          {"wst", report.worst_group},
          {"eo", report.eo},
          {"per_group", groups},
          {"conditional_rates", rates},
          {"warnings", report.warnings}};
}

}  // namespace fairlatent
