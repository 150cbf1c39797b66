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
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/logged_data/session.hpp"
#include "slaterl/slate_env/episode.hpp"

namespace slaterl {

struct MdpSample {
  std::string mdp_id;
  std::size_t sequence_id = 0;
  std::vector<double> state;
  std::vector<double> observation;
  ItemId action = kNoItem;
  std::vector<double> action_features;
  double action_probability = 1.0;
  std::vector<ItemId> action_mask;
  double reward = 0.0;
  std::vector<double> next_state;
  std::vector<double> next_observation;
  ItemId next_action = kNoItem;  // kNoItem after the terminal step
  double next_action_probability = 0.0;
  std::vector<ItemId> next_action_mask;
  int terminal = 0;

  bool operator==(const MdpSample&) const = default;
};

/// Maps a structured state to the observation vector stored with a sample.
using ObsEncoder = std::function<std::vector<double>(const SlateState&)>;

inline ObsEncoder identity_encoder(const EpisodeConfig& cfg) {
  return [cfg](const SlateState& s) { return encode_state(s, cfg); };
}

inline std::vector<ItemId> page_mask(const Catalog& catalog, const std::vector<ItemId>& chosen,
                                     bool distinct) {
  std::vector<ItemId> out;
  for (const Item& item : catalog.items()) {
    if (distinct && std::find(chosen.begin(), chosen.end(), item.id) != chosen.end()) continue;
    out.push_back(item.id);
  }
  return out;
}

/// One sample per item decision. Per-step reward is realized feedback times
/// utility; the terminal flag sits on the session's last step.
inline std::vector<MdpSample> to_mdp_samples(const SessionRecord& session,
                                             const EpisodeConfig& cfg, const Catalog& catalog,
                                             const ObsEncoder& encoder = nullptr) {
  cfg.validate();
  const ObsEncoder enc = encoder ? encoder : identity_encoder(cfg);
  if (session.pages.size() > cfg.max_pages) {
    throw ContractError("session " + session.session_id + " has more pages than max_pages");
  }
  struct Step {
    SlateState state;
    ItemId action;
    double prob;
    double reward;
  };
  std::vector<Step> steps;
  SlateState s;
  s.user_context = session.user_context();
  for (std::size_t p = 0; p < session.pages.size(); ++p) {
    const LoggedPage& page = session.pages[p];
    if (page.items.size() != cfg.page_size) {
      throw ContractError("page of " + std::to_string(page.items.size()) +
                          " items in a geometry of page size " + std::to_string(cfg.page_size));
    }
    s.page_index = p;
    s.chosen_items.clear();
    for (std::size_t i = 0; i < page.items.size(); ++i) {
      const double u = catalog.utility(page.items[i]);  // throws on unknown items
      s.step_index = p * cfg.page_size + i;
      steps.push_back(Step{s, page.items[i], page.behavior_probs[i],
                           page.feedback[i] ? u : 0.0});
      s.chosen_items.push_back(page.items[i]);
    }
    s.history.push_back(CompletedPage{page.items, page.feedback});
  }
  SlateState end = s;
  end.chosen_items.clear();
  end.step_index = steps.size();
  end.finished = true;

  std::vector<MdpSample> out;
  out.reserve(steps.size());
  std::vector<double> cur_state, cur_obs;
  std::vector<ItemId> cur_mask;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    MdpSample m;
    m.mdp_id = session.session_id;
    m.sequence_id = t;
    if (t == 0) {
      cur_state = encode_state(steps[0].state, cfg);
      cur_obs = enc(steps[0].state);
      cur_mask = page_mask(catalog, steps[0].state.chosen_items, cfg.distinct_within_page);
    }
    m.state = cur_state;
    m.observation = cur_obs;
    m.action = steps[t].action;
    m.action_features = catalog.at(m.action).features;
    m.action_probability = steps[t].prob;
    m.action_mask = cur_mask;
    m.reward = steps[t].reward;
    if (t + 1 < steps.size()) {
      const SlateState& ns = steps[t + 1].state;
      m.next_state = encode_state(ns, cfg);
      m.next_observation = enc(ns);
      m.next_action = steps[t + 1].action;
      m.next_action_probability = steps[t + 1].prob;
      m.next_action_mask = page_mask(catalog, ns.chosen_items, cfg.distinct_within_page);
      cur_state = m.next_state;
      cur_obs = m.next_observation;
      cur_mask = m.next_action_mask;
    } else {
      m.next_state = encode_state(end, cfg);
      m.next_observation = enc(end);
      m.terminal = 1;
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline nlohmann::json to_json(const MdpSample& m) {
  return nlohmann::json{{"mdp_id", m.mdp_id},
                        {"sequence_id", m.sequence_id},
                        {"state", m.state},
                        {"observation", m.observation},
                        {"action", m.action},
                        {"action_features", m.action_features},
                        {"action_probability", m.action_probability},
                        {"action_mask", m.action_mask},
                        {"reward", m.reward},
                        {"next_state", m.next_state},
                        {"next_observation", m.next_observation},
                        {"next_action", m.next_action},
                        {"next_action_probability", m.next_action_probability},
                        {"next_action_mask", m.next_action_mask},
                        {"terminal", m.terminal}};
}

inline MdpSample sample_from_json(const nlohmann::json& j) {
  MdpSample m;
  try {
    j.at("mdp_id").get_to(m.mdp_id);
    j.at("sequence_id").get_to(m.sequence_id);
    j.at("state").get_to(m.state);
    j.at("observation").get_to(m.observation);
    j.at("action").get_to(m.action);
    j.at("action_features").get_to(m.action_features);
    j.at("action_probability").get_to(m.action_probability);
    j.at("action_mask").get_to(m.action_mask);
    j.at("reward").get_to(m.reward);
    j.at("next_state").get_to(m.next_state);
    j.at("next_observation").get_to(m.next_observation);
    j.at("next_action").get_to(m.next_action);
    j.at("next_action_probability").get_to(m.next_action_probability);
    j.at("next_action_mask").get_to(m.next_action_mask);
    j.at("terminal").get_to(m.terminal);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad MDP sample record: ") + e.what());
  }
  return m;
}

inline void write_samples(std::ostream& out, const std::vector<MdpSample>& samples) {
  for (const MdpSample& m : samples) out << to_json(m).dump() << '\n';
}

inline std::string samples_to_string(const std::vector<MdpSample>& samples) {
  std::ostringstream out;
  write_samples(out, samples);
  return out.str();
}

inline std::vector<MdpSample> read_samples(std::istream& in) {
  std::vector<MdpSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(sample_from_json(j));
  }
  return out;
}

}  // namespace slaterl
