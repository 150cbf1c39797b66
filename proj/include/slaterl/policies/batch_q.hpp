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

// Fitted Q iteration with a linear Q over the policy features. The max in the
// Bellman target, and the greedy action at run time, only consider actions
// the cloned behavior policy finds likely enough:
//   BC(a | s) >= threshold * max_b BC(b | s).

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "slaterl/core/error.hpp"
#include "slaterl/logged_data/mdp.hpp"
#include "slaterl/policies/bc.hpp"
#include "slaterl/policies/policy.hpp"

namespace slaterl {

/// Indices of the mask that pass the filter. Empty only when threshold > 1.
inline std::vector<std::size_t> bcq_filter(std::span<const double> bc_probs, double threshold) {
  std::vector<std::size_t> out;
  if (bc_probs.empty()) return out;
  const double mx = *std::max_element(bc_probs.begin(), bc_probs.end());
  for (std::size_t k = 0; k < bc_probs.size(); ++k) {
    if (bc_probs[k] >= threshold * mx) out.push_back(k);
  }
  return out;
}

class BcqPolicy : public Policy {
 public:
  BcqPolicy(LinearSoftmaxPolicy bc, std::vector<double> q_weights, double threshold)
      : bc_(std::move(bc)), w_(std::move(q_weights)), threshold_(threshold) {
    if (w_.size() != bc_.dim()) throw ContractError("Q weights do not match the features");
  }

  const LinearSoftmaxPolicy& bc() const { return bc_; }
  const std::vector<double>& q_weights() const { return w_; }
  double threshold() const { return threshold_; }
  std::string name() const override { return "bcq"; }

  std::vector<double> q_values(const SlateState& s, std::span<const ItemId> mask) const {
    const auto rows = bc_.action_features(s, mask);
    std::vector<double> q(mask.size(), 0.0);
    for (std::size_t k = 0; k < mask.size(); ++k) {
      for (std::size_t d = 0; d < w_.size(); ++d) q[k] += w_[d] * rows[k * w_.size() + d];
    }
    return q;
  }

  std::vector<double> action_probabilities(const SlateState& s,
                                           std::span<const ItemId> mask) const override {
    if (mask.empty()) return {};
    const auto p = bc_.action_probabilities(s, mask);
    const auto keep = bcq_filter(p, threshold_);
    if (keep.empty()) return one_hot(mask.size(), argmax(p));
    const auto q = q_values(s, mask);
    std::size_t best = keep.front();
    for (std::size_t k : keep) {
      if (q[k] > q[best]) best = k;
    }
    return one_hot(mask.size(), best);
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"format", "slaterl-policy"}, {"version", 1},
                          {"kind", "bcq"},              {"name", "bcq"},
                          {"feature_spec", bc_.spec()}, {"theta", bc_.theta()},
                          {"q_weights", w_},            {"bcq_threshold", threshold_}};
  }

 private:
  LinearSoftmaxPolicy bc_;
  std::vector<double> w_;
  double threshold_;
};

struct BcqResult {
  BcqPolicy policy;
  std::size_t fallbacks = 0;            // next states whose filtered set was empty
  std::vector<double> weight_change;    // |w_k - w_{k-1}| per iteration
};

/// Fitted Q iteration on decision samples with the behavior-cloned filter.
inline BcqResult batch_q_learn(const std::vector<MdpSample>& samples, const Catalog& catalog,
                               const EpisodeConfig& episode, const LinearSoftmaxPolicy& bc,
                               const LearnerConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw EmptyDataError("no samples for Q learning");
  const std::size_t D = bc.dim();
  const std::size_t n = samples.size();

  Eigen::MatrixXd X(n, D);
  Eigen::VectorXd r(n);
  ActionRows next;  // candidate rows of every non-terminal next state
  std::vector<std::ptrdiff_t> next_of(n, -1);
  std::vector<std::vector<std::size_t>> allowed;
  std::size_t fallbacks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const MdpSample& m = samples[i];
    const SlateState s = decode_state(m.state, episode);
    const std::vector<ItemId> one = {m.action};
    const auto row = bc.action_features(s, one);
    for (std::size_t d = 0; d < D; ++d) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
    r(static_cast<Eigen::Index>(i)) = m.reward;
    if (m.terminal || m.next_action_mask.empty()) continue;
    const SlateState ns = decode_state(m.next_state, episode);
    next_of[i] = static_cast<std::ptrdiff_t>(allowed.size());
    append_rows(next, bc, ns, m.next_action_mask, kNoItem);
    auto keep = bcq_filter(bc.action_probabilities(ns, m.next_action_mask), cfg.bcq_threshold);
    if (keep.empty()) {
      // fall back to the cloned argmax
      ++fallbacks;
      const auto p = bc.action_probabilities(ns, m.next_action_mask);
      keep.push_back(argmax(p));
    }
    allowed.push_back(std::move(keep));
  }

  Eigen::MatrixXd A = X.transpose() * X;
  A.diagonal().array() += cfg.ridge;
  const Eigen::LDLT<Eigen::MatrixXd> solver(A);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D));
  Eigen::VectorXd y(n);
  std::vector<double> change;
  for (std::size_t it = 0; it < cfg.fqi_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double target = r(static_cast<Eigen::Index>(i));
      if (next_of[i] >= 0) {
        const std::size_t k = static_cast<std::size_t>(next_of[i]);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j : allowed[k]) {
          const double* x = next.row(k, j);
          double q = 0.0;
          for (std::size_t d = 0; d < D; ++d) q += w(static_cast<Eigen::Index>(d)) * x[d];
          best = std::max(best, q);
        }
        target += cfg.gamma * best;
      }
      y(static_cast<Eigen::Index>(i)) = target;
    }
    Eigen::VectorXd w_new = solver.solve(X.transpose() * y);
    if (!w_new.allFinite()) throw DivergenceError(it, "fitted Q weights are not finite");
    change.push_back((w_new - w).norm());
    w = std::move(w_new);
  }
  std::vector<double> weights(w.data(), w.data() + w.size());
  return BcqResult{BcqPolicy(bc, std::move(weights), cfg.bcq_threshold), fallbacks,
                   std::move(change)};
}

}  // namespace slaterl
