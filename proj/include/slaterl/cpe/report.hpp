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

#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/error.hpp"
#include "slaterl/cpe/estimators.hpp"
#include "slaterl/user_model/value_model.hpp"

namespace slaterl::cpe {

struct RelativeEstimate {
  double value = 0.0;     // absolute estimate
  double se = 0.0;
  double relative = 0.0;  // value / behavior value
  double relative_se = 0.0;
};

struct CpeReport {
  std::string policy;
  std::size_t trajectories = 0;
  double gamma = 1.0;
  Estimate behavior;
  RelativeEstimate is, swis, dr, seq_dr;
};

inline RelativeEstimate relative_to(const Estimate& e, double behavior) {
  if (behavior == 0.0 || !std::isfinite(behavior)) {
    throw UndefinedError("behavior value is zero; relative estimates are undefined");
  }
  return RelativeEstimate{e.value, e.se, e.value / behavior, e.se / std::abs(behavior)};
}

struct CpeConfig {
  double gamma = 1.0;
  Clip clip;
};

/// All four estimators against one target policy.
inline CpeReport evaluate_cpe(const std::vector<Trajectory>& trajs, const Policy& target,
                              const ValueFunctions& vf, const CpeConfig& cfg) {
  CpeReport r;
  r.policy = target.name();
  r.trajectories = trajs.size();
  r.gamma = cfg.gamma;
  r.behavior = behavior_value(trajs, cfg.gamma);
  const double b = r.behavior.value;
  r.is = relative_to(is_estimate(trajs, target, cfg.gamma), b);
  r.swis = relative_to(swis_estimate(trajs, target, cfg.gamma, cfg.clip), b);
  r.dr = relative_to(dr_estimate(trajs, target, cfg.gamma, vf), b);
  r.seq_dr = relative_to(seq_dr_estimate(trajs, target, cfg.gamma, vf), b);
  return r;
}

/// Reward and Q functions backed by rollouts of a response model. The value
/// model must outlive the returned functions.
inline ValueFunctions model_values(const ValueModel& vm, const Policy& target) {
  ValueFunctions vf;
  vf.reward = [&vm](const SlateState& s, ItemId a) { return vm.reward(s, a); };
  vf.q = [&vm, &target](const SlateState& s, ItemId a) { return vm.q(s, a, target); };
  return vf;
}

inline std::string fmt_cell(const RelativeEstimate& e) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f(\xC2\xB1%.2f)", e.relative, e.relative_se);
  return buf;
}

inline std::string cpe_table(const std::vector<CpeReport>& reports) {
  std::string out = "policy\tIS\tSWIS\tDR\tSeq. DR\n";
  for (const auto& r : reports) {
    out += r.policy + "\t" + fmt_cell(r.is) + "\t" + fmt_cell(r.swis) + "\t" + fmt_cell(r.dr) +
           "\t" + fmt_cell(r.seq_dr) + "\n";
  }
  return out;
}

inline nlohmann::json to_json(const RelativeEstimate& e) {
  return {{"value", e.value}, {"se", e.se}, {"relative", e.relative}, {"relative_se", e.relative_se}};
}

inline nlohmann::json to_json(const CpeReport& r) {
  return {{"policy", r.policy},
          {"trajectories", r.trajectories},
          {"gamma", r.gamma},
          {"behavior_value", r.behavior.value},
          {"behavior_se", r.behavior.se},
          {"is", to_json(r.is)},
          {"swis", to_json(r.swis)},
          {"dr", to_json(r.dr)},
          {"seq_dr", to_json(r.seq_dr)}};
}

}  // namespace slaterl::cpe
