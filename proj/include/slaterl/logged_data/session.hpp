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
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/logged_data/feedback.hpp"
#include "slaterl/logged_data/log_format.hpp"

namespace slaterl {

inline constexpr const char* kPadPolicyId = "pad";

struct LoggedPage {
  std::vector<ItemId> items;
  Feedback feedback;
  std::vector<double> behavior_probs;
  std::string behavior_policy_id;
  std::int64_t timestamp = 0;
  bool padded = false;

  bool operator==(const LoggedPage&) const = default;
};

struct SessionRecord {
  std::string session_id;
  std::vector<double> user_portrait;
  std::vector<double> click_history;
  std::vector<LoggedPage> pages;
  std::size_t padded_page_count = 0;
  // Carried along for dataset splits.
  std::string behavior_policy_id;
  std::int64_t start_timestamp = 0;

  std::size_t real_page_count() const { return pages.size() - padded_page_count; }

  /// Model input: portrait followed by click history.
  std::vector<double> user_context() const {
    std::vector<double> ctx(user_portrait);
    ctx.insert(ctx.end(), click_history.begin(), click_history.end());
    return ctx;
  }

  bool operator==(const SessionRecord&) const = default;
};

/// A random page of distinct items, drawn without replacement. probs[i] is the
/// probability the sampler gave to the item it picked at position i.
inline LoggedPage random_padding_page(const std::vector<ItemId>& pool, std::size_t page_size,
                                      Rng& rng) {
  if (pool.size() < page_size) throw ConfigError("catalog has fewer items than a page");
  std::vector<ItemId> left(pool);
  LoggedPage page;
  for (std::size_t i = 0; i < page_size; ++i) {
    const std::size_t k = uniform_index(rng, left.size());
    page.behavior_probs.push_back(1.0 / static_cast<double>(left.size()));
    page.items.push_back(left[k]);
    left.erase(left.begin() + static_cast<std::ptrdiff_t>(k));
  }
  page.feedback.assign(page_size, 0);
  page.behavior_policy_id = kPadPolicyId;
  page.padded = true;
  return page;
}

/// Groups rows by session (first-appearance order), orders pages by
/// sequence_id and pads every session to max_pages with zero-feedback pages.
/// The padding stream of a session depends only on (seed, session_id).
inline std::vector<SessionRecord> sessionize_and_pad(const std::vector<LoggedRow>& rows,
                                                     std::size_t max_pages,
                                                     const Catalog& catalog,
                                                     std::uint64_t seed) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const LoggedRow*>> groups;
  for (const LoggedRow& row : rows) {
    auto [it, fresh] = groups.try_emplace(row.session_id);
    if (fresh) order.push_back(row.session_id);
    it->second.push_back(&row);
  }
  const std::vector<ItemId> pool = catalog.ids();

  std::vector<SessionRecord> out;
  out.reserve(order.size());
  for (const std::string& id : order) {
    auto& group = groups[id];
    std::stable_sort(group.begin(), group.end(), [](const LoggedRow* a, const LoggedRow* b) {
      return a->sequence_id < b->sequence_id;
    });
    SessionRecord s;
    s.session_id = id;
    s.user_portrait = group.front()->user_portrait;
    s.click_history = group.front()->click_history;
    s.behavior_policy_id = group.front()->behavior_policy_id;
    s.start_timestamp = group.front()->timestamp;
    std::size_t page_size = group.front()->exposed_items.size();
    for (std::size_t k = 0; k < group.size(); ++k) {
      const LoggedRow& row = *group[k];
      if (row.sequence_id != static_cast<std::int64_t>(k + 1)) {
        throw IntegrityError("session " + id + ": expected sequence_id " + std::to_string(k + 1) +
                             ", found " + std::to_string(row.sequence_id));
      }
      if (row.user_portrait != s.user_portrait || row.click_history != s.click_history) {
        throw IntegrityError("session " + id + ": user features change between pages");
      }
      for (ItemId item : row.exposed_items) {
        if (!catalog.contains(item)) throw CatalogError("unknown item id " + std::to_string(item));
      }
      s.pages.push_back(LoggedPage{row.exposed_items, row.user_feedback,
                                   row.behavior_action_probs, row.behavior_policy_id,
                                   row.timestamp, false});
      s.start_timestamp = std::min(s.start_timestamp, row.timestamp);
    }
    if (s.pages.size() > max_pages) {
      throw ContractError("session " + id + " has " + std::to_string(s.pages.size()) +
                          " pages, more than max_pages " + std::to_string(max_pages));
    }
    Rng rng(derive_seed(seed, "pad", hash_string(id)));
    while (s.pages.size() < max_pages) {
      LoggedPage pad = random_padding_page(pool, page_size, rng);
      pad.timestamp = s.pages.back().timestamp;
      s.pages.push_back(std::move(pad));
      s.padded_page_count += 1;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace slaterl
