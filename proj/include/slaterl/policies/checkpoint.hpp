// Copyright 2026 The slaterl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Policy checkpoints: JSON with format "slaterl-policy", version 1, a kind
// ("linear-softmax" or "bcq"), the feature spec and the weight arrays.

#pragma once

#include <cmath>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "slaterl/core/error.hpp"
#include "slaterl/policies/batch_q.hpp"
#include "slaterl/policies/policy.hpp"

namespace slaterl {

inline std::string save_policy(const Policy& policy) {
  if (auto p = dynamic_cast<const LinearSoftmaxPolicy*>(&policy)) return p->to_json().dump(1) + "\n";
  if (auto p = dynamic_cast<const BcqPolicy*>(&policy)) return p->to_json().dump(1) + "\n";
  throw ContractError("policy '" + policy.name() + "' has no checkpoint format");
}

inline std::shared_ptr<Policy> load_policy(std::string_view text, const Catalog& catalog) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "slaterl-policy") {
      throw SchemaError("not a policy checkpoint");
    }
    if (j.at("version").get<int>() != 1) throw SchemaError("unsupported checkpoint version");
    const FeatureSpec spec = j.at("feature_spec").get<FeatureSpec>();
    if (spec.item_dim != catalog.feature_dim() ||
        (spec.item_onehot && spec.catalog_size != catalog.size())) {
      throw CatalogError("policy was trained on a different catalog");
    }
    auto theta = j.at("theta").get<std::vector<double>>();
    for (double t : theta) {
      if (!std::isfinite(t)) throw SchemaError("checkpoint has non-finite weights");
    }
    const std::string kind = j.at("kind").get<std::string>();
    LinearSoftmaxPolicy lin(catalog, spec, std::move(theta), j.at("name").get<std::string>());
    if (kind == "linear-softmax") return std::make_shared<LinearSoftmaxPolicy>(std::move(lin));
    if (kind == "bcq") {
      return std::make_shared<BcqPolicy>(std::move(lin),
                                         j.at("q_weights").get<std::vector<double>>(),
                                         j.at("bcq_threshold").get<double>());
    }
    throw SchemaError("unknown policy kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad policy checkpoint: ") + e.what());
  } catch (const ContractError& e) {
    throw SchemaError(std::string("bad policy checkpoint: ") + e.what());
  }
}

}  // namespace slaterl
