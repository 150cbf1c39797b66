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
#include <string>
#include <vector>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/logged_data/feedback.hpp"

namespace slaterl {

/// Episode geometry. A slate episode is one page; a sequential-slate episode
/// is up to max_pages pages.
struct EpisodeConfig {
  double gamma = 0.95;
  std::size_t page_size = 9;
  std::size_t row_width = 3;
  std::size_t max_pages = 1;
  bool distinct_within_page = true;

  static EpisodeConfig slate() { return EpisodeConfig{}; }
  static EpisodeConfig seqslate() {
    EpisodeConfig cfg;
    cfg.max_pages = 4;
    return cfg;
  }

  std::size_t horizon() const { return page_size * max_pages; }
  UnlockLayout layout() const { return UnlockLayout::for_page(page_size, row_width); }

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("gamma must lie in (0, 1]");
    if (page_size < 1) throw ContractError("page_size must be at least 1");
    if (max_pages < 1) throw ContractError("max_pages must be at least 1");
    (void)layout();
  }

  bool operator==(const EpisodeConfig&) const = default;
};

struct CompletedPage {
  std::vector<ItemId> items;
  Feedback feedback;

  bool operator==(const CompletedPage&) const = default;
};

/// Environment state: static user context, the items chosen so far on the
/// current page, and the pages already completed with their feedback.
struct SlateState {
  std::vector<double> user_context;
  std::vector<ItemId> chosen_items;
  std::size_t page_index = 0;
  std::size_t step_index = 0;
  std::vector<CompletedPage> history;
  bool finished = false;

  bool operator==(const SlateState&) const = default;
};

struct StepResult {
  SlateState next_state;
  double reward = 0.0;
  bool done = false;
  Feedback feedback;  // realized feedback when this step completed a page

  bool operator==(const StepResult&) const = default;
};

/// Expected discounted utility of a page: sum_i gamma^i * p_i * r_i.
inline double page_reward(std::span<const double> probabilities,
                          std::span<const double> utilities, double gamma) {
  if (probabilities.size() != utilities.size()) {
    throw ContractError("page_reward: " + std::to_string(probabilities.size()) +
                        " probabilities for " + std::to_string(utilities.size()) +
                        " utilities");
  }
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("page_reward: probability outside [0, 1]");
    total += discount * p * utilities[i];
    discount *= gamma;
  }
  return total;
}

inline std::vector<double> page_utilities(const Catalog& catalog, std::span<const ItemId> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (ItemId id : items) out.push_back(catalog.utility(id));
  return out;
}

/// Realized page reward: the same sum with probabilities replaced by feedback.
inline double realized_page_reward(const Catalog& catalog, std::span<const ItemId> items,
                                   std::span<const std::uint8_t> feedback, double gamma) {
  std::vector<double> p(feedback.begin(), feedback.end());
  return page_reward(p, page_utilities(catalog, items), gamma);
}

// State vector layout used by MDP samples. It is lossless, so learners can
// rebuild the structured state:
//   [user_context | page_index | step_index | finished | chosen (page_size, -1 pad)
//    | history items ((max_pages-1) * page_size, -1 pad) | history feedback (same)]
inline std::size_t encoded_state_size(std::size_t user_dim, const EpisodeConfig& cfg) {
  const std::size_t hist = (cfg.max_pages - 1) * cfg.page_size;
  return user_dim + 3 + cfg.page_size + 2 * hist;
}

inline std::vector<double> encode_state(const SlateState& state, const EpisodeConfig& cfg) {
  const std::size_t hist = (cfg.max_pages - 1) * cfg.page_size;
  if (state.history.size() > cfg.max_pages - 1 && !state.finished) {
    throw ContractError("encode_state: history longer than the episode allows");
  }
  std::vector<double> out(state.user_context);
  out.reserve(encoded_state_size(state.user_context.size(), cfg));
  out.push_back(static_cast<double>(state.page_index));
  out.push_back(static_cast<double>(state.step_index));
  out.push_back(state.finished ? 1.0 : 0.0);
  for (std::size_t i = 0; i < cfg.page_size; ++i) {
    out.push_back(i < state.chosen_items.size() ? state.chosen_items[i] : -1.0);
  }
  std::vector<double> items(hist, -1.0);
  std::vector<double> fb(hist, 0.0);
  std::size_t k = 0;
  for (const CompletedPage& page : state.history) {
    for (std::size_t i = 0; i < page.items.size() && k < hist; ++i, ++k) {
      items[k] = page.items[i];
      fb[k] = page.feedback[i];
    }
  }
  out.insert(out.end(), items.begin(), items.end());
  out.insert(out.end(), fb.begin(), fb.end());
  return out;
}

inline SlateState decode_state(std::span<const double> encoded, const EpisodeConfig& cfg) {
  const std::size_t fixed = encoded_state_size(0, cfg);
  if (encoded.size() < fixed) throw ContractError("decode_state: vector too short");
  const std::size_t user_dim = encoded.size() - fixed;
  SlateState s;
  s.user_context.assign(encoded.begin(), encoded.begin() + static_cast<std::ptrdiff_t>(user_dim));
  std::size_t k = user_dim;
  s.page_index = static_cast<std::size_t>(encoded[k++]);
  s.step_index = static_cast<std::size_t>(encoded[k++]);
  s.finished = encoded[k++] != 0.0;
  for (std::size_t i = 0; i < cfg.page_size; ++i, ++k) {
    if (encoded[k] >= 0.0) s.chosen_items.push_back(static_cast<ItemId>(encoded[k]));
  }
  const std::size_t hist = (cfg.max_pages - 1) * cfg.page_size;
  const std::size_t fb_base = k + hist;
  for (std::size_t p = 0; p + 1 < cfg.max_pages; ++p) {
    const std::size_t base = k + p * cfg.page_size;
    if (encoded[base] < 0.0) break;
    CompletedPage page;
    for (std::size_t i = 0; i < cfg.page_size; ++i) {
      page.items.push_back(static_cast<ItemId>(encoded[base + i]));
      page.feedback.push_back(static_cast<std::uint8_t>(encoded[fb_base + p * cfg.page_size + i]));
    }
    s.history.push_back(std::move(page));
  }
  return s;
}

}  // namespace slaterl
