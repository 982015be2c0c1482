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


#ifndef FAIRLATENT_SERIALIZATION_HPP_
#define FAIRLATENT_SERIALIZATION_HPP_

#include "json.hpp"

#include "fairlatent/direction_combiner.hpp"
#include "fairlatent/fair_repr.hpp"
#include "fairlatent/latent_world.hpp"
#include "fairlatent/logreg.hpp"
#include "fairlatent/metrics.hpp"

namespace fairlatent {

using Json = nlohmann::ordered_json;

Json ToJson(const WorldSpec& spec);
WorldSpec WorldSpecFromJson(const Json& j);

Json ToJson(const FittedDirection& dir);
FittedDirection FittedDirectionFromJson(const Json& j);

Json ToJson(const CombinedDirection& dir);
CombinedDirection CombinedDirectionFromJson(const Json& j);

Json ToJson(const Mlp& mlp);
Mlp MlpFromJson(const Json& j);

Json ToJson(const EncoderState& state);
EncoderState EncoderStateFromJson(const Json& j);

Json ToJson(const LinearProbe& probe);
LinearProbe LinearProbeFromJson(const Json& j);

// Column names acc, wst, eo plus per-group and conditional-rate detail.
Json ToJson(const FairnessReport& report);

}  // namespace fairlatent

#endif  // FAIRLATENT_SERIALIZATION_HPP_
