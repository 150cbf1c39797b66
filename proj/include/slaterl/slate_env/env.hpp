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
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/slate_env/episode.hpp"
#include "slaterl/slate_env/response_model.hpp"

namespace slaterl {

/// How a completed page is rewarded. Sampled is the environment proper;
/// Expected replaces the realized page reward by its expectation under the
/// model (feedback is still sampled so the episode can go on), which is what
/// value rollouts want.
enum class RewardMode { sampled, expected };

/// Stateless slate environment. Transitions are pure functions of
/// (state, action); the only randomness is drawn from the caller's rng at
/// page completion.
class SlateEnv {
 public:
  SlateEnv(const ResponseModel& model, const Catalog& catalog, EpisodeConfig config)
      : model_(&model), catalog_(&catalog), config_(config) {
    config_.validate();
    if (config_.distinct_within_page && catalog.size() < config_.page_size) {
      throw ConfigError("catalog has fewer items than a page");
    }
  }

  const EpisodeConfig& config() const { return config_; }
  const Catalog& catalog() const { return *catalog_; }
  const ResponseModel& model() const { return *model_; }

  SlateState reset(std::span<const double> user_context) const {
    if (user_context.size() != model_->user_dim()) {
      throw ContractError("user context has dimension " + std::to_string(user_context.size()) +
                          ", model expects " + std::to_string(model_->user_dim()));
    }
    SlateState s;
    s.user_context.assign(user_context.begin(), user_context.end());
    return s;
  }

  std::vector<ItemId> action_mask(const SlateState& state) const {
    std::vector<ItemId> out;
    if (state.finished) return out;
    out.reserve(catalog_->size());
    for (const Item& item : catalog_->items()) {
      if (config_.distinct_within_page &&
          std::find(state.chosen_items.begin(), state.chosen_items.end(), item.id) !=
              state.chosen_items.end()) {
        continue;
      }
      out.push_back(item.id);
    }
    return out;
  }

  bool is_valid_action(const SlateState& state, ItemId action) const {
    if (state.finished || !catalog_->contains(action)) return false;
    if (!config_.distinct_within_page) return true;
    return std::find(state.chosen_items.begin(), state.chosen_items.end(), action) ==
           state.chosen_items.end();
  }

  StepResult step(const SlateState& state, ItemId action, Rng& rng,
                  RewardMode mode = RewardMode::sampled) const {
    StepResult out = place(state, action);
    if (!completes_page(out.next_state)) return out;

    const UnlockLayout layout = config_.layout();
    const std::vector<double> classes = page_classes(state, out.next_state.chosen_items);
    Feedback fb = valid_patterns(layout)[sample_index(rng, classes)];
    const std::vector<double> utils = page_utilities(*catalog_, out.next_state.chosen_items);
    double reward;
    if (mode == RewardMode::sampled) {
      std::vector<double> p(fb.begin(), fb.end());
      reward = page_reward(p, utils, config_.gamma);
    } else {
      reward = page_reward(pattern_marginals(classes, layout), utils, config_.gamma);
    }
    close_page(out, std::move(fb), reward);
    bool more = can_continue(out.next_state);
    if (more) more = bernoulli(rng, model_->continue_prob(out.next_state));
    set_continuation(out, more);
    return out;
  }

  // The pieces of step, exposed so exact enumeration can branch on every
  // outcome instead of sampling one.

  /// Validates the action and appends it; no randomness involved.
  StepResult place(const SlateState& state, ItemId action) const {
    if (state.finished) throw InvalidActionError("step called on a finished episode");
    if (!is_valid_action(state, action)) {
      throw InvalidActionError("item " + std::to_string(action) + " is masked at step " +
                               std::to_string(state.step_index));
    }
    StepResult out;
    out.next_state = state;
    out.next_state.chosen_items.push_back(action);
    out.next_state.step_index += 1;
    return out;
  }

  bool completes_page(const SlateState& placed) const {
    return placed.chosen_items.size() >= config_.page_size;
  }

  /// Distribution over valid_patterns for a full slate shown in state.
  std::vector<double> page_classes(const SlateState& state, std::span<const ItemId> slate) const {
    return class_distribution(model_->conditional_probs(state, slate), config_.layout());
  }

  /// Moves the completed page into the history with its feedback.
  void close_page(StepResult& out, Feedback fb, double reward) const {
    SlateState& next = out.next_state;
    next.history.push_back(CompletedPage{std::move(next.chosen_items), fb});
    next.chosen_items.clear();
    out.feedback = std::move(fb);
    out.reward = reward;
  }

  bool can_continue(const SlateState& after_page) const {
    return after_page.page_index + 1 < config_.max_pages;
  }

  void set_continuation(StepResult& out, bool more) const {
    if (more) {
      out.next_state.page_index += 1;
    } else {
      out.next_state.finished = true;
      out.done = true;
    }
  }

  using BatchItem = std::variant<StepResult, Error>;

  /// Element i is step(states[i], actions[i], rngs[i]). A failing element is
  /// reported in place; the others still run.
  std::vector<BatchItem> batch_step(std::span<const SlateState> states,
                                    std::span<const ItemId> actions,
                                    std::span<Rng> rngs) const {
    if (states.size() != actions.size() || states.size() != rngs.size()) {
      throw ContractError("batch_step: states, actions and rngs differ in length");
    }
    std::vector<BatchItem> out;
    out.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      try {
        out.emplace_back(step(states[i], actions[i], rngs[i]));
      } catch (const Error& e) {
        out.emplace_back(e);
      }
    }
    return out;
  }

 private:
  const ResponseModel* model_;
  const Catalog* catalog_;
  EpisodeConfig config_;
};

/// One seeded episode: the environment plus its state and private rng.
class EnvSession {
 public:
  EnvSession(const SlateEnv& env, std::span<const double> user_context, std::uint64_t seed)
      : env_(&env), state_(env.reset(user_context)), rng_(make_rng(seed, "env")) {}

  const SlateState& state() const { return state_; }
  bool done() const { return state_.finished; }
  std::vector<ItemId> action_mask() const { return env_->action_mask(state_); }
  Rng& rng() { return rng_; }

  StepResult step(ItemId action) {
    StepResult r = env_->step(state_, action, rng_);
    state_ = r.next_state;
    return r;
  }

 private:
  const SlateEnv* env_;
  SlateState state_;
  Rng rng_;
};

}  // namespace slaterl
