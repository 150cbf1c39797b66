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

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/logged_data/log_format.hpp"

namespace slaterl {

enum class SplitMode { sl_rl, by_user, by_time };

inline std::string_view to_string(SplitMode m) {
  switch (m) {
    case SplitMode::sl_rl: return "sl-rl";
    case SplitMode::by_user: return "by-user";
    case SplitMode::by_time: return "by-time";
  }
  return "?";
}

inline SplitMode parse_split_mode(std::string_view s) {
  if (s == "sl-rl") return SplitMode::sl_rl;
  if (s == "by-user") return SplitMode::by_user;
  if (s == "by-time") return SplitMode::by_time;
  throw ConfigError("unknown split mode '" + std::string(s) + "'");
}

struct SplitParams {
  double test_fraction = 0.1;            // by-user
  std::uint64_t seed = 0;                // by-user
  std::optional<std::int64_t> cutoff;    // by-time: sessions starting before go to train
};

struct DatasetSplit {
  SplitMode mode = SplitMode::sl_rl;
  std::vector<LoggedRow> train;
  std::vector<LoggedRow> test;
};

/// Era of a behavior policy id: "sl" or "rl" as a prefix ("sl", "sl:softmax").
inline std::optional<std::string> policy_era(std::string_view policy_id) {
  for (std::string_view era : {"sl", "rl"}) {
    if (policy_id == era ||
        (policy_id.size() > era.size() && policy_id.substr(0, era.size()) == era &&
         policy_id[era.size()] == ':')) {
      return std::string(era);
    }
  }
  return std::nullopt;
}

/// Stable key of a user: hash of the portrait and click history bit patterns.
inline std::uint64_t user_key(const LoggedRow& row) {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  auto mix = [&h](double v) { h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v)); };
  for (double v : row.user_portrait) mix(v);
  mix(0.5);
  for (double v : row.click_history) mix(v);
  return h;
}

/// Splits whole sessions; rows keep their original order within each side.
inline DatasetSplit split_dataset(const std::vector<LoggedRow>& rows, SplitMode mode,
                                  const SplitParams& params) {
  // Decide once per session from its first row (era) or earliest row (time).
  std::unordered_map<std::string, bool> to_test;
  std::unordered_map<std::string, std::int64_t> start;
  for (const LoggedRow& r : rows) {
    auto [it, fresh] = start.try_emplace(r.session_id, r.timestamp);
    if (!fresh) it->second = std::min(it->second, r.timestamp);
  }
  for (const LoggedRow& r : rows) {
    if (to_test.count(r.session_id)) continue;
    bool test = false;
    switch (mode) {
      case SplitMode::sl_rl: {
        auto era = policy_era(r.behavior_policy_id);
        if (!era) {
          throw ConfigError("session " + r.session_id +
                            " has no sl/rl era tag in behavior_policy_id '" +
                            r.behavior_policy_id + "'");
        }
        test = *era == "rl";
        break;
      }
      case SplitMode::by_user: {
        if (!(params.test_fraction >= 0.0 && params.test_fraction <= 1.0)) {
          throw ConfigError("test fraction must lie in [0, 1]");
        }
        Rng rng(derive_seed(params.seed, "split", user_key(r)));
        test = uniform01(rng) < params.test_fraction;
        break;
      }
      case SplitMode::by_time:
        if (!params.cutoff) throw ConfigError("by-time split needs a cutoff timestamp");
        test = start[r.session_id] >= *params.cutoff;
        break;
    }
    to_test[r.session_id] = test;
  }
  DatasetSplit out;
  out.mode = mode;
  for (const LoggedRow& r : rows) {
    if (mode == SplitMode::sl_rl && !policy_era(r.behavior_policy_id)) {
      throw ConfigError("row of session " + r.session_id + " has no sl/rl era tag");
    }
    (to_test[r.session_id] ? out.test : out.train).push_back(r);
  }
  if (mode == SplitMode::by_time && (out.train.empty() || out.test.empty())) {
    throw EmptyDataError(std::string("by-time cutoff leaves the ") +
                         (out.train.empty() ? "train" : "test") + " side empty");
  }
  return out;
}

}  // namespace slaterl
