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

#include <algorithm>
#include <cmath>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/core/optim.hpp"
#include "slaterl/logged_data/mdp.hpp"
#include "slaterl/policies/policy.hpp"

namespace slaterl {

struct LearnerConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 100;
  double gamma = 1.0;  // batch learners default to no discount
  std::uint64_t seed = 0;
  double bcq_threshold = 0.3;
  double l2 = 1e-3;
  std::size_t fqi_iterations = 20;
  double ridge = 1.0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
    if (!(bcq_threshold >= 0.0)) throw ConfigError("bcq_threshold must be non-negative");
    if (!(l2 >= 0.0) || !(ridge >= 0.0)) throw ConfigError("regularization must be non-negative");
  }
};

/// Feature rows of every masked action of many states, stored back to back.
struct ActionRows {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<std::size_t> offset;  // first row of state k; offset.back() = total rows
  std::vector<std::size_t> chosen;  // row of the logged action within its state, or npos

  std::size_t states() const { return offset.size() - 1; }
  std::size_t count(std::size_t k) const { return offset[k + 1] - offset[k]; }
  const double* row(std::size_t k, std::size_t j) const { return x.data() + (offset[k] + j) * dim; }
};

inline void append_rows(ActionRows& rows, const LinearSoftmaxPolicy& featurizer,
                        const SlateState& s, std::span<const ItemId> mask, ItemId action) {
  if (rows.offset.empty()) rows.offset.push_back(0);
  rows.dim = featurizer.dim();
  const auto r = featurizer.action_features(s, mask);
  rows.x.insert(rows.x.end(), r.begin(), r.end());
  rows.offset.push_back(rows.offset.back() + mask.size());
  auto it = std::find(mask.begin(), mask.end(), action);
  rows.chosen.push_back(it == mask.end() ? static_cast<std::size_t>(-1)
                                         : static_cast<std::size_t>(it - mask.begin()));
}

/// Mean cross-entropy of the logged actions plus l2/2 |theta|^2.
inline double bc_loss(const std::vector<double>& theta, const ActionRows& rows, double l2,
                      std::vector<double>* grad) {
  const std::size_t D = rows.dim;
  const std::size_t n = rows.states();
  if (grad) grad->assign(D, 0.0);
  double loss = 0.0;
  std::vector<double> z;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t m = rows.count(k);
    z.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double* x = rows.row(k, j);
      for (std::size_t d = 0; d < D; ++d) z[j] += theta[d] * x[d];
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) total += (v = std::exp(v - mx));
    const std::size_t a = rows.chosen[k];
    loss += -(std::log(z[a] / total));
    if (grad) {
      for (std::size_t j = 0; j < m; ++j) {
        const double coef = z[j] / total - (j == a ? 1.0 : 0.0);
        const double* x = rows.row(k, j);
        for (std::size_t d = 0; d < D; ++d) (*grad)[d] += coef * x[d];
      }
    }
  }
  const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;
  loss *= inv;
  if (grad) {
    for (std::size_t d = 0; d < D; ++d) (*grad)[d] = (*grad)[d] * inv + l2 * theta[d];
  }
  for (double t : theta) loss += 0.5 * l2 * t * t;
  return loss;
}

struct BcResult {
  LinearSoftmaxPolicy policy;
  optim::DescentResult fit;
};

/// Behavior cloning on decision samples; states are decoded from their
/// lossless encoding.
inline BcResult bc_fit(const std::vector<MdpSample>& samples, const Catalog& catalog,
                       const EpisodeConfig& episode, const FeatureSpec& spec,
                       const LearnerConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw EmptyDataError("no samples to clone");
  LinearSoftmaxPolicy policy(catalog, spec, {}, "bc");
  ActionRows rows;
  for (const auto& m : samples) {
    append_rows(rows, policy, decode_state(m.state, episode), m.action_mask, m.action);
    if (rows.chosen.back() == static_cast<std::size_t>(-1)) {
      throw ContractError("sample " + m.mdp_id + ":" + std::to_string(m.sequence_id) +
                          " has an action outside its mask");
    }
  }
  std::vector<double> theta(policy.dim(), 0.0);
  optim::DescentConfig dc;
  dc.epochs = cfg.epochs;
  dc.learning_rate = cfg.learning_rate;
  auto fit = optim::descend(
      theta,
      [&](const std::vector<double>& p, std::vector<double>& g) {
        return bc_loss(p, rows, cfg.l2, &g);
      },
      dc, "behavior cloning loss");
  policy.set_theta(std::move(theta));
  return BcResult{std::move(policy), std::move(fit)};
}

}  // namespace slaterl
