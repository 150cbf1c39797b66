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

// Logged episodes for counterfactual evaluation.
//
// A page's feedback is drawn only after its last item is placed, so the
// purchase of item i depends on the items placed after it. Per-item rewards
// would therefore not be functions of the history up to their own step, which
// per-decision estimators rely on. A trajectory carries the page reward
// sum_i gamma^i f_i u_i on the page's last step and 0 elsewhere, which is
// exactly what the environment emits.

#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/error.hpp"
#include "slaterl/logged_data/mdp.hpp"
#include "slaterl/logged_data/session.hpp"
#include "slaterl/slate_env/episode.hpp"

namespace slaterl::cpe {

struct TrajectoryStep {
  SlateState state;
  ItemId action = kNoItem;
  double behavior_prob = 1.0;
  double reward = 0.0;
  std::vector<ItemId> action_mask;

  bool operator==(const TrajectoryStep& o) const {
    return encode(state) == encode(o.state) && action == o.action &&
           behavior_prob == o.behavior_prob && reward == o.reward && action_mask == o.action_mask;
  }

 private:
  static std::vector<double> encode(const SlateState& s) {
    std::vector<double> out(s.user_context);
    out.push_back(static_cast<double>(s.page_index));
    out.push_back(static_cast<double>(s.step_index));
    for (ItemId a : s.chosen_items) out.push_back(a);
    for (const auto& p : s.history) {
      for (std::size_t i = 0; i < p.items.size(); ++i) {
        out.push_back(p.items[i]);
        out.push_back(p.feedback[i]);
      }
    }
    return out;
  }
};

struct Trajectory {
  std::string mdp_id;
  std::vector<TrajectoryStep> steps;
  double weight = 1.0;  // probability under the behavior policy when enumerated

  bool operator==(const Trajectory&) const = default;
};

/// sum_t gamma^t r_t of one trajectory.
inline double discounted_return(const Trajectory& t, double gamma) {
  double g = 0.0, d = 1.0;
  for (const auto& s : t.steps) {
    g += d * s.reward;
    d *= gamma;
  }
  return g;
}

/// Real pages of a session as a trajectory; padded pages are dropped since
/// the session ended before them.
inline Trajectory trajectory_from_session(const SessionRecord& session, const EpisodeConfig& cfg,
                                          const Catalog& catalog) {
  cfg.validate();
  Trajectory t;
  t.mdp_id = session.session_id;
  SlateState s;
  s.user_context = session.user_context();
  for (std::size_t p = 0; p < session.pages.size(); ++p) {
    const LoggedPage& page = session.pages[p];
    if (page.padded) break;
    if (page.items.size() != cfg.page_size) {
      throw ContractError("page size does not match the episode geometry");
    }
    s.page_index = p;
    s.chosen_items.clear();
    for (std::size_t i = 0; i < page.items.size(); ++i) {
      TrajectoryStep step;
      s.step_index = p * cfg.page_size + i;
      step.state = s;
      step.action = page.items[i];
      step.behavior_prob = page.behavior_probs[i];
      step.action_mask = page_mask(catalog, s.chosen_items, cfg.distinct_within_page);
      if (i + 1 == page.items.size()) {
        step.reward = realized_page_reward(catalog, page.items, page.feedback, cfg.gamma);
      }
      t.steps.push_back(std::move(step));
      s.chosen_items.push_back(page.items[i]);
    }
    s.history.push_back(CompletedPage{page.items, page.feedback});
  }
  return t;
}

inline std::vector<Trajectory> trajectories_from_sessions(
    const std::vector<SessionRecord>& sessions, const EpisodeConfig& cfg, const Catalog& catalog) {
  std::vector<Trajectory> out;
  for (const auto& s : sessions) {
    out.push_back(trajectory_from_session(s, cfg, catalog));
    if (out.back().steps.empty()) out.pop_back();
  }
  return out;
}

// ---- line-delimited records: one object per step ------------------------

inline void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs,
                               const EpisodeConfig& cfg) {
  for (const auto& t : trajs) {
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      const auto& s = t.steps[k];
      nlohmann::json j{{"mdp_id", t.mdp_id},
                       {"sequence_id", k},
                       {"state", encode_state(s.state, cfg)},
                       {"action", s.action},
                       {"behavior_prob", s.behavior_prob},
                       {"reward", s.reward},
                       {"action_mask", s.action_mask}};
      if (t.weight != 1.0) j["weight"] = t.weight;
      out << j.dump() << '\n';
    }
  }
}

inline std::string trajectories_to_string(const std::vector<Trajectory>& trajs,
                                          const EpisodeConfig& cfg) {
  std::ostringstream out;
  write_trajectories(out, trajs, cfg);
  return out.str();
}

/// Steps of one mdp_id must be contiguous and in sequence order.
inline std::vector<Trajectory> read_trajectories(std::istream& in, const EpisodeConfig& cfg) {
  std::vector<Trajectory> out;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string id = j.at("mdp_id").get<std::string>();
      const std::size_t seq = j.at("sequence_id").get<std::size_t>();
      if (out.empty() || out.back().mdp_id != id) {
        if (seen.count(id)) throw ParseError(lineno, "steps of " + id + " are not contiguous");
        seen[id] = out.size();
        out.push_back(Trajectory{id, {}, j.value("weight", 1.0)});
      }
      Trajectory& t = out.back();
      if (seq != t.steps.size()) throw ParseError(lineno, "sequence_id out of order in " + id);
      TrajectoryStep s;
      s.state = decode_state(j.at("state").get<std::vector<double>>(), cfg);
      s.action = j.at("action").get<ItemId>();
      s.behavior_prob = j.at("behavior_prob").get<double>();
      s.reward = j.at("reward").get<double>();
      s.action_mask = j.at("action_mask").get<std::vector<ItemId>>();
      t.steps.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

}  // namespace slaterl::cpe
