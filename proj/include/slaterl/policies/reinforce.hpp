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
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/core/stats.hpp"
#include "slaterl/policies/evaluate.hpp"
#include "slaterl/policies/policy.hpp"
#include "slaterl/synth/oracle.hpp"

namespace slaterl {

struct ReinforceConfig {
  double learning_rate = 0.05;
  std::size_t iterations = 200;
  std::size_t batch = 32;  // episodes per update
  double gamma = 1.0;      // discount of the returns-to-go
  double l2 = 0.0;
  double max_grad_norm = 10.0;  // 0 disables clipping
  std::uint64_t seed = 0;
};

struct ReinforceResult {
  LinearSoftmaxPolicy policy;
  std::vector<double> curve;  // mean episode return of each batch
};

/// Episodic REINFORCE. The baseline of step t is the batch mean of the
/// returns-to-go at t.
inline ReinforceResult reinforce_online(const OnlineEnv& online, LinearSoftmaxPolicy policy,
                                        const ReinforceConfig& cfg) {
  if (!online.env || online.users.empty()) throw ContractError("online environment has no users");
  if (cfg.batch == 0) throw ConfigError("batch must be positive");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  const SlateEnv& env = *online.env;
  const std::size_t dim = policy.dim();
  ReinforceResult out{policy, {}};

  struct Step {
    SlateState state;
    std::vector<ItemId> mask;
    ItemId action;
    double reward;
  };
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::vector<std::vector<Step>> episodes(cfg.batch);
    std::vector<double> totals;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      Rng rng = make_rng(cfg.seed, "reinforce", it * cfg.batch + b);
      const auto& ctx = online.users[uniform_index(rng, online.users.size())];
      SlateState s = env.reset(ctx);
      double total = 0.0;
      while (!s.finished) {
        auto mask = env.action_mask(s);
        const ItemId a = sample_action(out.policy, s, mask, rng);
        StepResult r = env.step(s, a, rng);
        episodes[b].push_back(Step{s, std::move(mask), a, r.reward});
        total += r.reward;
        s = std::move(r.next_state);
      }
      totals.push_back(total);
    }
    out.curve.push_back(stats::mean(totals));

    // returns-to-go and their per-step mean
    std::vector<std::vector<double>> G(cfg.batch);
    std::vector<double> base_sum, base_n;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const auto& ep = episodes[b];
      G[b].assign(ep.size(), 0.0);
      double g = 0.0;
      for (std::size_t t = ep.size(); t-- > 0;) {
        g = ep[t].reward + cfg.gamma * g;
        G[b][t] = g;
      }
      if (base_sum.size() < ep.size()) {
        base_sum.resize(ep.size(), 0.0);
        base_n.resize(ep.size(), 0.0);
      }
      for (std::size_t t = 0; t < ep.size(); ++t) {
        base_sum[t] += G[b][t];
        base_n[t] += 1.0;
      }
    }
    std::vector<double> grad(dim, 0.0);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      for (std::size_t t = 0; t < episodes[b].size(); ++t) {
        const double adv = G[b][t] - base_sum[t] / base_n[t];
        if (adv == 0.0) continue;
        const Step& st = episodes[b][t];
        const auto g = out.policy.grad_log_prob(st.state, st.mask, st.action);
        for (std::size_t d = 0; d < dim; ++d) grad[d] += adv * g[d];
      }
    }
    double norm = 0.0;
    auto theta = out.policy.theta();
    for (std::size_t d = 0; d < dim; ++d) {
      grad[d] = grad[d] / static_cast<double>(cfg.batch) - cfg.l2 * theta[d];
      norm += grad[d] * grad[d];
    }
    norm = std::sqrt(norm);
    if (!std::isfinite(norm)) throw DivergenceError(it, "policy gradient is not finite");
    const double scale = cfg.max_grad_norm > 0 && norm > cfg.max_grad_norm
                             ? cfg.max_grad_norm / norm
                             : 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      theta[d] += cfg.learning_rate * scale * grad[d];
      if (!std::isfinite(theta[d])) throw DivergenceError(it, "policy parameters are not finite");
    }
    out.policy.set_theta(std::move(theta));
  }
  return out;
}

/// Exact J(theta) = E[sum_t gamma^t r_t] by enumeration.
inline double exact_policy_value(const ResponseModel& model, const Catalog& catalog,
                                 const EpisodeConfig& cfg,
                                 const std::vector<synth::WeightedContext>& contexts,
                                 const Policy& policy, double gamma) {
  return synth::expected_return(synth::enumerate_trajectories(model, catalog, cfg, contexts, policy),
                                gamma);
}

/// Exact gradient sum_tau P(tau) R(tau) sum_t grad log pi(a_t | s_t), the
/// expectation of the REINFORCE estimator without a baseline.
inline std::vector<double> exact_policy_gradient(const ResponseModel& model,
                                                 const Catalog& catalog, const EpisodeConfig& cfg,
                                                 const std::vector<synth::WeightedContext>& contexts,
                                                 const LinearSoftmaxPolicy& policy, double gamma) {
  const auto trajs = synth::enumerate_trajectories(model, catalog, cfg, contexts, policy);
  std::vector<double> grad(policy.dim(), 0.0);
  for (const auto& t : trajs) {
    const double w = t.weight * cpe::discounted_return(t, gamma);
    if (w == 0.0) continue;
    for (const auto& s : t.steps) {
      const auto g = policy.grad_log_prob(s.state, s.action_mask, s.action);
      for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += w * g[d];
    }
  }
  return grad;
}

}  // namespace slaterl
