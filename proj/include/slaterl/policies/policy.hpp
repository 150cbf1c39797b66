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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/slate_env/episode.hpp"
#include "slaterl/user_model/features.hpp"

namespace slaterl {

/// A distribution over the valid items of a state. The returned vector is
/// aligned with the mask, sums to one and puts nothing outside it.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<double> action_probabilities(const SlateState& state,
                                                   std::span<const ItemId> mask) const = 0;
  virtual std::string name() const { return "policy"; }

  double probability(const SlateState& state, std::span<const ItemId> mask, ItemId action) const {
    auto it = std::find(mask.begin(), mask.end(), action);
    if (it == mask.end()) return 0.0;
    return action_probabilities(state, mask)[static_cast<std::size_t>(it - mask.begin())];
  }
};

inline ItemId sample_action(const Policy& policy, const SlateState& state,
                            std::span<const ItemId> mask, Rng& rng) {
  if (mask.empty()) throw InvalidActionError("no valid action to choose from");
  const auto p = policy.action_probabilities(state, mask);
  return mask[sample_index(rng, p)];
}

/// First maximizer, so ties break toward the mask order.
inline std::size_t argmax(std::span<const double> xs) {
  return static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

inline std::vector<double> one_hot(std::size_t n, std::size_t k) {
  std::vector<double> out(n, 0.0);
  out[k] = 1.0;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

class UniformPolicy : public Policy {
 public:
  std::vector<double> action_probabilities(const SlateState&,
                                           std::span<const ItemId> mask) const override {
    return std::vector<double>(mask.size(), 1.0 / static_cast<double>(mask.size()));
  }
  std::string name() const override { return "uniform"; }
};

/// Wraps a function; the result is checked and renormalized over the mask.
class LambdaPolicy : public Policy {
 public:
  using Fn = std::function<std::vector<double>(const SlateState&, std::span<const ItemId>)>;
  explicit LambdaPolicy(Fn fn, std::string name = "lambda")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::vector<double> action_probabilities(const SlateState& s,
                                           std::span<const ItemId> mask) const override {
    auto p = fn_(s, mask);
    if (p.size() != mask.size()) throw ContractError("policy returned the wrong number of probabilities");
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw ContractError("policy returned a negative probability");
      total += v;
    }
    if (!(total > 0.0)) throw ContractError("policy returned an all-zero distribution");
    for (double& v : p) v /= total;
    return p;
  }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

/// Deterministic execution of another policy: all mass on its argmax.
class GreedyPolicy : public Policy {
 public:
  explicit GreedyPolicy(std::shared_ptr<const Policy> inner) : inner_(std::move(inner)) {}
  std::vector<double> action_probabilities(const SlateState& s,
                                           std::span<const ItemId> mask) const override {
    const auto p = inner_->action_probabilities(s, mask);
    return one_hot(p.size(), argmax(p));
  }
  std::string name() const override { return "greedy(" + inner_->name() + ")"; }

 private:
  std::shared_ptr<const Policy> inner_;
};

/// Softmax over theta . phi(s, a) with phi the shared featurization; the
/// position is the number of items already on the page.
class LinearSoftmaxPolicy : public Policy {
 public:
  LinearSoftmaxPolicy(Catalog catalog, FeatureSpec spec, std::vector<double> theta = {},
                      std::string name = "linear-softmax")
      : catalog_(std::move(catalog)), spec_(spec), layout_(spec), name_(std::move(name)) {
    theta_ = theta.empty() ? std::vector<double>(layout_.size, 0.0) : std::move(theta);
    if (theta_.size() != layout_.size) throw ContractError("theta does not match the feature spec");
  }

  const Catalog& catalog() const { return catalog_; }
  const FeatureSpec& spec() const { return spec_; }
  std::size_t dim() const { return layout_.size; }
  const std::vector<double>& theta() const { return theta_; }
  void set_theta(std::vector<double> t) {
    if (t.size() != layout_.size) throw ContractError("theta does not match the feature spec");
    theta_ = std::move(t);
  }
  std::string name() const override { return name_; }

  /// Feature rows of every masked action, row major.
  std::vector<double> action_features(const SlateState& s, std::span<const ItemId> mask) const {
    const HistorySummary hist = summarize_history(catalog_, s.history);
    const std::size_t pos = std::min(s.chosen_items.size(), spec_.page_size - 1);
    std::vector<double> rows(mask.size() * layout_.size);
    std::vector<double> x;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      featurize_into(spec_, layout_, catalog_, s.user_context, s.chosen_items, mask[k], pos,
                     s.page_index, hist, x);
      std::copy(x.begin(), x.end(), rows.begin() + static_cast<std::ptrdiff_t>(k * layout_.size));
    }
    return rows;
  }

  std::vector<double> logits_from(const std::vector<double>& rows, std::size_t n) const {
    std::vector<double> z(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double* x = rows.data() + k * layout_.size;
      for (std::size_t d = 0; d < layout_.size; ++d) z[k] += theta_[d] * x[d];
    }
    return z;
  }

  std::vector<double> action_probabilities(const SlateState& s,
                                           std::span<const ItemId> mask) const override {
    if (mask.empty()) return {};
    return softmax(logits_from(action_features(s, mask), mask.size()));
  }

  /// d log pi(a | s) / d theta = phi(s, a) - E_pi[phi(s, .)]
  std::vector<double> grad_log_prob(const SlateState& s, std::span<const ItemId> mask,
                                    ItemId action) const {
    auto it = std::find(mask.begin(), mask.end(), action);
    if (it == mask.end()) throw ContractError("action outside the mask");
    const std::size_t a = static_cast<std::size_t>(it - mask.begin());
    const auto rows = action_features(s, mask);
    const auto p = softmax(logits_from(rows, mask.size()));
    std::vector<double> g(rows.begin() + static_cast<std::ptrdiff_t>(a * layout_.size),
                          rows.begin() + static_cast<std::ptrdiff_t>((a + 1) * layout_.size));
    for (std::size_t k = 0; k < mask.size(); ++k) {
      for (std::size_t d = 0; d < layout_.size; ++d) g[d] -= p[k] * rows[k * layout_.size + d];
    }
    return g;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"format", "slaterl-policy"}, {"version", 1},
                          {"kind", "linear-softmax"},  {"name", name_},
                          {"feature_spec", spec_},      {"theta", theta_}};
  }

 private:
  Catalog catalog_;
  FeatureSpec spec_;
  FeatureLayout layout_;
  std::vector<double> theta_;
  std::string name_;
};

}  // namespace slaterl
