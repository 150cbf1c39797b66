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

// Value estimates from a response model. Q(s, a) is the mean discounted
// return of rollouts that take a and then follow the policy; page rewards in
// the rollouts are the model's expected page reward, so the only Monte Carlo
// noise left is the policy's own choices and the feedback that later pages
// condition on.

#pragma once

#include <algorithm>
#include <cstring>
#include <span>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/policies/policy.hpp"
#include "slaterl/slate_env/env.hpp"

namespace slaterl {

struct RolloutConfig {
  std::size_t samples = 8;
  std::size_t horizon = 0;  // 0: the episode horizon
  double gamma = 1.0;       // per-step discount of the returns
  std::uint64_t seed = 0;
};

struct ValueEstimate {
  double v = 0.0;
  std::vector<ItemId> mask;
  std::vector<double> q;
};

/// Stable 64-bit key of a state, used to seed its rollouts.
inline std::uint64_t state_key(const SlateState& s) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  auto mix = [&](std::uint64_t x) { h = splitmix64(h ^ x); };
  for (double x : s.user_context) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    mix(bits);
  }
  mix(s.page_index);
  for (ItemId a : s.chosen_items) mix(static_cast<std::uint64_t>(a) + 1);
  for (const auto& page : s.history) {
    mix(0xabcdefULL);
    for (std::size_t i = 0; i < page.items.size(); ++i) {
      mix((static_cast<std::uint64_t>(page.items[i]) << 1) | page.feedback[i]);
    }
  }
  return h;
}

class ValueModel {
 public:
  ValueModel(const ResponseModel& model, const Catalog& catalog, EpisodeConfig episode,
             RolloutConfig cfg)
      : env_(model, catalog, episode), cfg_(cfg) {
    if (cfg_.samples == 0) throw ConfigError("rollout sample count must be positive");
    const std::size_t h = cfg_.horizon ? cfg_.horizon : episode.horizon();
    cfg_.horizon = h;
  }

  const SlateEnv& env() const { return env_; }
  const RolloutConfig& config() const { return cfg_; }

  /// Model-expected immediate reward: nonzero only when a completes the page.
  double reward(const SlateState& s, ItemId a) const {
    check_action(s, a);
    if (s.chosen_items.size() + 1 < env_.config().page_size) return 0.0;
    std::vector<ItemId> slate = s.chosen_items;
    slate.push_back(a);
    const UnlockLayout layout = env_.config().layout();
    const auto classes = class_distribution(env_.model().conditional_probs(s, slate), layout);
    return page_reward(pattern_marginals(classes, layout), page_utilities(env_.catalog(), slate),
                       env_.config().gamma);
  }

  double q(const SlateState& s, ItemId a, const Policy& policy) const {
    check_action(s, a);
    const std::size_t remaining = env_.config().horizon() - s.step_index;
    if (cfg_.horizon < remaining) {
      throw ContractError("rollout horizon " + std::to_string(cfg_.horizon) +
                          " does not cover the " + std::to_string(remaining) +
                          " remaining steps");
    }
    Rng rng = make_rng(cfg_.seed, "q-rollout", state_key(s) ^ (static_cast<std::uint64_t>(a) << 1));
    double total = 0.0;
    for (std::size_t k = 0; k < cfg_.samples; ++k) {
      StepResult r = env_.step(s, a, rng, RewardMode::expected);
      double ret = r.reward, disc = cfg_.gamma;
      SlateState cur = std::move(r.next_state);
      while (!cur.finished) {
        const auto mask = env_.action_mask(cur);
        const ItemId b = sample_action(policy, cur, mask, rng);
        r = env_.step(cur, b, rng, RewardMode::expected);
        ret += disc * r.reward;
        disc *= cfg_.gamma;
        cur = std::move(r.next_state);
      }
      total += ret;
    }
    return total / static_cast<double>(cfg_.samples);
  }

  ValueEstimate estimates(const SlateState& s, const Policy& policy) const {
    ValueEstimate out;
    if (s.finished) return out;
    out.mask = env_.action_mask(s);
    const auto p = policy.action_probabilities(s, out.mask);
    for (std::size_t k = 0; k < out.mask.size(); ++k) {
      // actions the policy never takes do not enter V, but Q is still reported
      out.q.push_back(q(s, out.mask[k], policy));
      out.v += p[k] * out.q.back();
    }
    return out;
  }

  double v(const SlateState& s, const Policy& policy) const { return estimates(s, policy).v; }

 private:
  void check_action(const SlateState& s, ItemId a) const {
    if (!env_.is_valid_action(s, a)) {
      throw ContractError("value estimate asked for masked item " + std::to_string(a));
    }
  }

  SlateEnv env_;
  RolloutConfig cfg_;
};

}  // namespace slaterl
