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

// Off-policy estimators over logged trajectories. Steps are indexed from 0,
// so the objective is sum_t gamma^t r_t.
//
// Trajectory weights default to 1. When trajectories come from exact
// enumeration their weight is P_b(tau) and every average below becomes the
// expectation under the behavior policy.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/cpe/trajectory.hpp"
#include "slaterl/policies/policy.hpp"

namespace slaterl::cpe {

/// r(s, a): model reward of taking a in s. q(s, a): model return of taking a
/// in s and following the target afterwards.
struct ValueFunctions {
  std::function<double(const SlateState&, ItemId)> reward;
  std::function<double(const SlateState&, ItemId)> q;
};

/// Per-trajectory values and their weighted aggregate.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::vector<double> per_trajectory;
};

namespace detail {

inline void check_propensity(const TrajectoryStep& s, const std::string& id) {
  if (!(s.behavior_prob > 0.0 && s.behavior_prob <= 1.0)) {
    throw PropensityError("trajectory " + id + " step " + std::to_string(s.state.step_index) +
                          " has behavior probability " + std::to_string(s.behavior_prob));
  }
}

inline double target_prob(const Policy& target, const TrajectoryStep& s) {
  return target.probability(s.state, s.action_mask, s.action);
}

inline double checked(double v, const char* what, ItemId a) {
  if (!std::isfinite(v)) {
    throw ContractError(std::string("value model has no ") + what + " for item " +
                        std::to_string(a));
  }
  return v;
}

/// Weighted mean and the standard error of per-trajectory values.
inline Estimate aggregate(std::vector<double> values, const std::vector<Trajectory>& trajs) {
  Estimate e;
  double wsum = 0.0, s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    wsum += trajs[i].weight;
    s += trajs[i].weight * values[i];
  }
  e.value = s / wsum;
  const std::size_t n = values.size();
  if (n > 1) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ss += trajs[i].weight * (values[i] - e.value) * (values[i] - e.value);
    }
    // sample variance with unit weights; the same formula reweighted otherwise
    const double var = ss / wsum * static_cast<double>(n) / static_cast<double>(n - 1);
    e.se = std::sqrt(var / static_cast<double>(n));
  }
  e.per_trajectory = std::move(values);
  return e;
}

inline void require_nonempty(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw EmptyDataError("no trajectories to evaluate");
}

}  // namespace detail

/// Empirical (weighted) mean discounted return of the logged episodes.
inline Estimate behavior_value(const std::vector<Trajectory>& trajs, double gamma) {
  detail::require_nonempty(trajs);
  std::vector<double> v;
  for (const auto& t : trajs) v.push_back(discounted_return(t, gamma));
  return detail::aggregate(std::move(v), trajs);
}

/// Trajectory-level importance sampling: (prod_t rho_t) * sum_t gamma^t r_t.
inline Estimate is_estimate(const std::vector<Trajectory>& trajs, const Policy& target,
                            double gamma) {
  detail::require_nonempty(trajs);
  std::vector<double> v;
  for (const auto& t : trajs) {
    double w = 1.0;
    for (const auto& s : t.steps) {
      detail::check_propensity(s, t.mdp_id);
      w *= detail::target_prob(target, s) / s.behavior_prob;
    }
    v.push_back(w * discounted_return(t, gamma));
  }
  return detail::aggregate(std::move(v), trajs);
}

struct Clip {
  double lo = 0.1;
  double hi = 10.0;
};

/// Normalized cumulative weights w[t][tau]. A trajectory that has ended keeps
/// its last cumulative weight and contributes reward 0.
inline std::vector<std::vector<double>> swis_weights(const std::vector<Trajectory>& trajs,
                                                     const Policy& target, Clip clip) {
  if (!(clip.lo < clip.hi) || clip.lo < 0.0) throw ConfigError("clip interval must satisfy 0 <= lo < hi");
  std::size_t T = 0;
  for (const auto& t : trajs) T = std::max(T, t.steps.size());
  std::vector<std::vector<double>> cum(T, std::vector<double>(trajs.size(), 0.0));
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    double w = 1.0;
    for (std::size_t t = 0; t < T; ++t) {
      if (t < trajs[k].steps.size()) {
        const auto& s = trajs[k].steps[t];
        detail::check_propensity(s, trajs[k].mdp_id);
        const double rho = detail::target_prob(target, s) / s.behavior_prob;
        w *= std::clamp(rho, clip.lo, clip.hi);
      }
      cum[t][k] = trajs[k].weight * w;
    }
  }
  for (auto& row : cum) {
    double total = 0.0;
    for (double x : row) total += x;
    if (!(total > 0.0)) throw UndefinedError("all step-wise weights vanished");
    for (double& x : row) x /= total;
  }
  return cum;
}

/// Step-wise weighted importance sampling with clipped ratios:
/// sum_t gamma^t sum_tau w_t^tau r_t^tau.
inline Estimate swis_estimate(const std::vector<Trajectory>& trajs, const Policy& target,
                              double gamma, Clip clip = {}) {
  detail::require_nonempty(trajs);
  const auto w = swis_weights(trajs, target, clip);
  // per-trajectory shares scaled so that their weighted mean is the estimate
  double wsum = 0.0;
  for (const auto& t : trajs) wsum += t.weight;
  std::vector<double> v(trajs.size(), 0.0);
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    double d = 1.0, total = 0.0;
    for (std::size_t t = 0; t < trajs[k].steps.size(); ++t) {
      total += d * w[t][k] * trajs[k].steps[t].reward;
      d *= gamma;
    }
    v[k] = total * wsum / trajs[k].weight;
  }
  return detail::aggregate(std::move(v), trajs);
}

/// Expected model value of a state under the target: sum_a pi(a|s) f(s, a).
inline double policy_average(const Policy& target, const SlateState& s,
                             std::span<const ItemId> mask,
                             const std::function<double(const SlateState&, ItemId)>& f,
                             const char* what) {
  const auto p = target.action_probabilities(s, mask);
  double v = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (p[k] == 0.0) continue;
    v += p[k] * detail::checked(f(s, mask[k]), what, mask[k]);
  }
  return v;
}

/// Per-step doubly robust:
/// sum_t gamma^t [ r(s_t, pi) + rho_t (r_t - r(s_t, a_t)) ].
inline Estimate dr_estimate(const std::vector<Trajectory>& trajs, const Policy& target,
                            double gamma, const ValueFunctions& vf) {
  detail::require_nonempty(trajs);
  if (!vf.reward) throw ContractError("DR needs a reward model");
  std::vector<double> v;
  for (const auto& t : trajs) {
    double total = 0.0, d = 1.0;
    for (const auto& s : t.steps) {
      detail::check_propensity(s, t.mdp_id);
      const double rho = detail::target_prob(target, s) / s.behavior_prob;
      const double model = policy_average(target, s.state, s.action_mask, vf.reward, "reward");
      const double taken = detail::checked(vf.reward(s.state, s.action), "reward", s.action);
      total += d * (model + rho * (s.reward - taken));
      d *= gamma;
    }
    v.push_back(total);
  }
  return detail::aggregate(std::move(v), trajs);
}

/// Sequential doubly robust, by the backward recursion
/// V^t = V(s_t) + rho_t (r_t + gamma V^{t+1} - Q(s_t, a_t)), V^T = 0.
inline Estimate seq_dr_estimate(const std::vector<Trajectory>& trajs, const Policy& target,
                                double gamma, const ValueFunctions& vf) {
  detail::require_nonempty(trajs);
  if (!vf.q) throw ContractError("sequential DR needs a Q model");
  std::vector<double> v;
  for (const auto& t : trajs) {
    double next = 0.0;
    for (std::size_t k = t.steps.size(); k-- > 0;) {
      const auto& s = t.steps[k];
      detail::check_propensity(s, t.mdp_id);
      const double rho = detail::target_prob(target, s) / s.behavior_prob;
      const double vhat = policy_average(target, s.state, s.action_mask, vf.q, "Q value");
      const double q = rho == 0.0 ? 0.0 : detail::checked(vf.q(s.state, s.action), "Q value", s.action);
      next = vhat + rho * (s.reward + gamma * next - q);
    }
    v.push_back(next);
  }
  return detail::aggregate(std::move(v), trajs);
}

}  // namespace slaterl::cpe
