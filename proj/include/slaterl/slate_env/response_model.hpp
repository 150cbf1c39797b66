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
#include <cstdint>
#include <span>
#include <vector>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/logged_data/feedback.hpp"
#include "slaterl/slate_env/episode.hpp"

namespace slaterl {

/// A user's response to a full page.
///
/// conditional[i] is the purchase probability of position i given that its
/// row is unlocked; marginals[i] folds in the unlock probability and is the
/// probability that position i is purchased at all. class_probs is indexed
/// like valid_patterns(layout).
struct SlatePrediction {
  std::vector<double> conditional;
  std::vector<double> marginals;
  std::vector<double> class_probs;
  double continue_prob = 0.0;  // averaged over the class distribution
};

/// Row-conditional independence over the valid patterns, renormalized.
inline std::vector<double> class_distribution(std::span<const double> conditional,
                                              UnlockLayout layout) {
  if (conditional.size() != layout.page_size()) {
    throw ContractError("class_distribution: expected " + std::to_string(layout.page_size()) +
                        " probabilities, got " + std::to_string(conditional.size()));
  }
  const auto& patterns = valid_patterns(layout);
  std::vector<double> probs(patterns.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    const Feedback& fb = patterns[k];
    double p = 1.0;
    for (std::size_t i = 0; i < fb.size() && p > 0.0; ++i) {
      if (!position_unlocked(fb, i, layout)) break;  // the rest of the page is locked at 0
      p *= fb[i] ? conditional[i] : 1.0 - conditional[i];
    }
    probs[k] = p;
    total += p;
  }
  if (!(total > 0.0)) throw ContractError("class_distribution: degenerate probabilities");
  for (double& p : probs) p /= total;
  return probs;
}

inline std::vector<double> pattern_marginals(std::span<const double> class_probs,
                                             UnlockLayout layout) {
  const auto& patterns = valid_patterns(layout);
  std::vector<double> m(layout.page_size(), 0.0);
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (patterns[k][i]) m[i] += class_probs[k];
    }
  }
  return m;
}

class ResponseModel {
 public:
  virtual ~ResponseModel() = default;

  virtual std::size_t user_dim() const = 0;

  /// Conditional purchase probabilities for a complete page shown in `state`
  /// (context, page index and history are read from it).
  virtual std::vector<double> conditional_probs(const SlateState& state,
                                                std::span<const ItemId> slate) const = 0;

  /// Probability that the session goes on to another page, given the state
  /// after a page completed (that page is the last entry of history).
  virtual double continue_prob(const SlateState& after_page) const = 0;

  SlatePrediction predict(const SlateState& state, std::span<const ItemId> slate,
                          UnlockLayout layout) const {
    SlatePrediction out;
    out.conditional = conditional_probs(state, slate);
    for (double p : out.conditional) {
      if (!(p >= 0.0 && p <= 1.0)) throw ContractError("response model produced p outside [0, 1]");
    }
    out.class_probs = class_distribution(out.conditional, layout);
    out.marginals = pattern_marginals(out.class_probs, layout);
    const auto& patterns = valid_patterns(layout);
    SlateState after = state;
    after.chosen_items.clear();
    after.history.push_back(CompletedPage{std::vector<ItemId>(slate.begin(), slate.end()), {}});
    double cont = 0.0;
    for (std::size_t k = 0; k < patterns.size(); ++k) {
      if (out.class_probs[k] == 0.0) continue;
      after.history.back().feedback = patterns[k];
      cont += out.class_probs[k] * continue_prob(after);
    }
    out.continue_prob = cont;
    return out;
  }
};

inline Feedback sample_feedback(const SlatePrediction& prediction, UnlockLayout layout, Rng& rng) {
  return valid_patterns(layout)[sample_index(rng, prediction.class_probs)];
}

}  // namespace slaterl
