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

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/logged_data/log_format.hpp"
#include "slaterl/policies/policy.hpp"
#include "slaterl/slate_env/env.hpp"
#include "slaterl/synth/world.hpp"

namespace slaterl::synth {

inline EpisodeConfig world_episode(const WorldSpec& w, std::size_t max_pages, double gamma = 0.95) {
  EpisodeConfig cfg;
  cfg.page_size = w.page_size;
  cfg.row_width = w.row_width;
  cfg.max_pages = max_pages;
  cfg.gamma = gamma;
  cfg.validate();
  return cfg;
}

/// Softmax over the world's base attraction; blind to slate and position.
/// With history_aware it also adds the long-term shift earned on earlier
/// pages, unscaled by the temperature, the way a deployed recommender follows
/// up on recent purchases while exploring the rest.
class AttractionPolicy : public Policy {
 public:
  AttractionPolicy(const World& world, double temperature, std::string name = "attraction",
                   bool history_aware = false)
      : world_(&world), temperature_(temperature), name_(std::move(name)),
        history_aware_(history_aware) {
    if (!(temperature > 0.0)) throw ConfigError("behavior temperature must be positive");
  }
  std::vector<double> action_probabilities(const SlateState& s,
                                           std::span<const ItemId> mask) const override {
    std::vector<double> z(mask.size());
    for (std::size_t k = 0; k < mask.size(); ++k) {
      z[k] = world_->base_logit(s.user_context, mask[k]) / temperature_;
      if (history_aware_) z[k] += world_->history_shift(mask[k], s.history);
    }
    return softmax(z);
  }
  std::string name() const override { return name_; }

 private:
  const World* world_;
  double temperature_;
  std::string name_;
  bool history_aware_;
};

/// Picks the item with the largest immediate expected value under the true
/// world, q * r, given what is already on the page and the earlier pages.
class MyopicGreedyPolicy : public Policy {
 public:
  explicit MyopicGreedyPolicy(const World& world) : world_(&world) {}
  std::vector<double> action_probabilities(const SlateState& s,
                                           std::span<const ItemId> mask) const override {
    std::vector<double> value(mask.size());
    const std::size_t pos = s.chosen_items.size();
    for (std::size_t k = 0; k < mask.size(); ++k) {
      value[k] = world_->item_prob(s.user_context, s.chosen_items, mask[k], pos, s.history) *
                 world_->catalog().utility(mask[k]);
    }
    return one_hot(mask.size(), argmax(value));
  }
  std::string name() const override { return "myopic-greedy"; }

 private:
  const World* world_;
};

struct GenConfig {
  std::size_t sessions = 1000;
  std::size_t max_pages = 1;
  std::uint64_t seed = 0;
  std::string policy_id = "sl";
  std::size_t session_offset = 0;  // numbering and rng streams start here
  std::int64_t start_timestamp = 1600000000;
};

inline std::string session_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%07zu", k);
  return buf;
}

/// Samples sessions from the world under the behavior policy. Every row
/// records the probability the policy gave to the item it showed.
inline std::vector<LoggedRow> simulate_logs(const World& world, const Policy& behavior,
                                            const GenConfig& cfg) {
  if (cfg.sessions == 0) throw ConfigError("at least one session is required");
  const WorldSpec& w = world.spec();
  const EpisodeConfig ep = world_episode(w, cfg.max_pages);
  SlateEnv env(world, w.catalog, ep);
  std::vector<LoggedRow> rows;
  for (std::size_t k = cfg.session_offset; k < cfg.session_offset + cfg.sessions; ++k) {
    Rng rng = make_rng(cfg.seed, "session", k);
    const auto& ctx = w.users[uniform_index(rng, w.users.size())];
    SlateState s = env.reset(ctx);
    std::vector<double> probs;
    while (!s.finished) {
      const auto mask = env.action_mask(s);
      const auto p = behavior.action_probabilities(s, mask);
      const std::size_t idx = sample_index(rng, p);
      probs.push_back(p[idx]);
      const std::size_t page = s.page_index;
      StepResult r = env.step(s, mask[idx], rng);
      if (!r.feedback.empty()) {
        LoggedRow row;
        row.timestamp = cfg.start_timestamp + static_cast<std::int64_t>(k) * 1000 +
                        static_cast<std::int64_t>(page) * 10;
        row.session_id = session_name(k);
        row.sequence_id = static_cast<std::int64_t>(page) + 1;
        row.exposed_items = r.next_state.history.back().items;
        row.user_feedback = r.feedback;
        row.user_portrait.assign(ctx.begin(), ctx.begin() + static_cast<std::ptrdiff_t>(w.portrait_dim));
        row.click_history.assign(ctx.begin() + static_cast<std::ptrdiff_t>(w.portrait_dim), ctx.end());
        for (ItemId id : row.exposed_items) {
          const auto& f = w.catalog.at(id).features;
          row.item_features.insert(row.item_features.end(), f.begin(), f.end());
        }
        row.behavior_policy_id = cfg.policy_id;
        row.behavior_action_probs = std::move(probs);
        probs.clear();
        rows.push_back(std::move(row));
      }
      s = std::move(r.next_state);
    }
  }
  return rows;
}

struct LogStats {
  std::size_t sessions = 0;
  std::size_t pages = 0;
  double items_per_session = 0.0;
  double purchases_per_session = 0.0;
  double rewards_per_session = 0.0;  // undiscounted utility of purchases
};

inline LogStats log_stats(const std::vector<LoggedRow>& rows, const Catalog& catalog) {
  LogStats st;
  double items = 0, buys = 0, reward = 0;
  std::string last;
  for (const auto& r : rows) {
    if (r.session_id != last) {
      ++st.sessions;
      last = r.session_id;
    }
    ++st.pages;
    items += static_cast<double>(r.exposed_items.size());
    for (std::size_t i = 0; i < r.exposed_items.size(); ++i) {
      if (!r.user_feedback[i]) continue;
      buys += 1;
      reward += catalog.utility(r.exposed_items[i]);
    }
  }
  if (st.sessions) {
    const double n = static_cast<double>(st.sessions);
    st.items_per_session = items / n;
    st.purchases_per_session = buys / n;
    st.rewards_per_session = reward / n;
  }
  return st;
}

inline std::string stats_table(const LogStats& st) {
  std::ostringstream out;
  out << "statistic\tvalue\n";
  out << "Sessions\t" << st.sessions << '\n';
  out << "Pages\t" << st.pages << '\n';
  out << "Items per session\t" << text::fixed(st.items_per_session, 1) << '\n';
  out << "Purchases per session\t" << text::fixed(st.purchases_per_session, 1) << '\n';
  out << "Rewards per session\t" << text::fixed(st.rewards_per_session, 1) << '\n';
  return out.str();
}

}  // namespace slaterl::synth
