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

// Exact values by enumerating every episode: users, actions, feedback
// patterns and continuation outcomes, each weighted by its probability.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/cpe/trajectory.hpp"
#include "slaterl/policies/policy.hpp"
#include "slaterl/slate_env/env.hpp"
#include "slaterl/synth/simulate.hpp"
#include "slaterl/synth/world.hpp"

namespace slaterl::synth {

struct WeightedContext {
  std::vector<double> context;
  double weight = 1.0;
};

namespace detail {

struct Enumerator {
  const SlateEnv& env;
  const Policy& policy;
  std::size_t limit;
  std::vector<cpe::Trajectory>& out;

  void emit(cpe::Trajectory& cur, double w) {
    if (out.size() >= limit) {
      throw SizeError("enumeration exceeds " + std::to_string(limit) + " trajectories");
    }
    cpe::Trajectory t = cur;
    t.weight = w;
    t.mdp_id = "e" + std::to_string(out.size());
    out.push_back(std::move(t));
  }

  void walk(const SlateState& s, cpe::Trajectory& cur, double w) {
    if (s.finished) {
      emit(cur, w);
      return;
    }
    const auto mask = env.action_mask(s);
    const auto p = policy.action_probabilities(s, mask);
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (p[k] <= 0.0) continue;
      cpe::TrajectoryStep step{s, mask[k], p[k], 0.0, mask};
      StepResult placed = env.place(s, mask[k]);
      if (!env.completes_page(placed.next_state)) {
        cur.steps.push_back(step);
        walk(placed.next_state, cur, w * p[k]);
        cur.steps.pop_back();
        continue;
      }
      const auto& slate = placed.next_state.chosen_items;
      const auto classes = env.page_classes(s, slate);
      const auto& patterns = valid_patterns(env.config().layout());
      const auto utils = page_utilities(env.catalog(), slate);
      for (std::size_t c = 0; c < patterns.size(); ++c) {
        if (classes[c] <= 0.0) continue;
        StepResult r = placed;
        std::vector<double> f(patterns[c].begin(), patterns[c].end());
        env.close_page(r, patterns[c], page_reward(f, utils, env.config().gamma));
        step.reward = r.reward;
        cur.steps.push_back(step);
        const double wc = w * p[k] * classes[c];
        if (env.can_continue(r.next_state)) {
          const double cp = env.model().continue_prob(r.next_state);
          if (cp > 0.0) {
            StepResult more = r;
            env.set_continuation(more, true);
            walk(more.next_state, cur, wc * cp);
          }
          if (cp < 1.0) {
            StepResult stop = r;
            env.set_continuation(stop, false);
            walk(stop.next_state, cur, wc * (1.0 - cp));
          }
        } else {
          env.set_continuation(r, false);
          walk(r.next_state, cur, wc);
        }
        cur.steps.pop_back();
      }
    }
  }
};

}  // namespace detail

/// Every episode with nonzero probability under the policy; weights sum to
/// the total context weight.
inline std::vector<cpe::Trajectory> enumerate_trajectories(
    const ResponseModel& model, const Catalog& catalog, const EpisodeConfig& cfg,
    const std::vector<WeightedContext>& contexts, const Policy& policy,
    std::size_t limit = 2'000'000) {
  SlateEnv env(model, catalog, cfg);
  std::vector<cpe::Trajectory> out;
  detail::Enumerator e{env, policy, limit, out};
  for (const auto& ctx : contexts) {
    cpe::Trajectory cur;
    e.walk(env.reset(ctx.context), cur, ctx.weight);
  }
  return out;
}

inline double expected_return(const std::vector<cpe::Trajectory>& trajs, double gamma) {
  double v = 0.0;
  for (const auto& t : trajs) v += t.weight * cpe::discounted_return(t, gamma);
  return v;
}

inline std::vector<WeightedContext> population(const WorldSpec& w) {
  std::vector<WeightedContext> out;
  for (const auto& u : w.users) out.push_back({u, 1.0 / static_cast<double>(w.users.size())});
  return out;
}

inline void check_enumerable(const WorldSpec& w, std::size_t max_pages) {
  if (w.catalog.size() > 4 || w.page_size > 2 || max_pages > 2) {
    throw SizeError("oracle_value needs catalog <= 4, page_size <= 2 and max_pages <= 2 (got " +
                    std::to_string(w.catalog.size()) + ", " + std::to_string(w.page_size) + ", " +
                    std::to_string(max_pages) + ")");
  }
}

/// Exact expected episode return (the undiscounted sum of page rewards, as
/// the online evaluator measures it), averaged over the world's users.
inline double oracle_value(const World& world, const Policy& policy, std::size_t max_pages,
                           double gamma = 0.95) {
  check_enumerable(world.spec(), max_pages);
  const EpisodeConfig cfg = world_episode(world.spec(), max_pages, gamma);
  return expected_return(
      enumerate_trajectories(world, world.catalog(), cfg, population(world.spec()), policy), 1.0);
}

}  // namespace slaterl::synth
