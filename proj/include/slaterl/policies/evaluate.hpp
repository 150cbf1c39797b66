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

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/core/stats.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/policies/policy.hpp"
#include "slaterl/slate_env/env.hpp"

namespace slaterl {

/// An environment plus the user population episodes start from. Each episode
/// draws its user uniformly.
struct OnlineEnv {
  const SlateEnv* env = nullptr;
  std::vector<std::vector<double>> users;
};

/// A failure inside one evaluation episode; keeps the original kind.
class EpisodeError : public Error {
 public:
  EpisodeError(std::size_t episode, const Error& cause)
      : Error(cause.kind(), "episode " + std::to_string(episode) + ": " + cause.what()),
        episode_(episode) {}
  std::size_t episode() const noexcept { return episode_; }

 private:
  std::size_t episode_;
};

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;  // population std of episode returns
  std::size_t episodes = 0;
  std::vector<double> returns;

  double standard_error() const {
    return episodes > 1 ? std * std::sqrt(static_cast<double>(episodes) /
                                          static_cast<double>(episodes - 1)) /
                              std::sqrt(static_cast<double>(episodes))
                        : 0.0;
  }
  std::string summary(int digits = 1) const {
    return text::fixed(mean, digits) + "(±" + text::fixed(std, digits) + ")";
  }
};

/// Return of one episode: the undiscounted sum of the rewards the
/// environment emits (each already a discounted page sum).
inline double run_episode(const Policy& policy, const SlateEnv& env, std::span<const double> ctx,
                          Rng& rng, RewardMode mode = RewardMode::sampled) {
  SlateState s = env.reset(ctx);
  double ret = 0.0;
  while (!s.finished) {
    const auto mask = env.action_mask(s);
    const ItemId a = sample_action(policy, s, mask, rng);
    StepResult r = env.step(s, a, rng, mode);
    ret += r.reward;
    s = std::move(r.next_state);
  }
  return ret;
}

/// Episode e uses its own stream derived from (seed, e), so results do not
/// depend on how episodes are scheduled.
inline EvalResult evaluate_online(const Policy& policy, const OnlineEnv& online,
                                  std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw ContractError("evaluate_online needs at least one episode");
  if (!online.env || online.users.empty()) throw ContractError("online environment has no users");
  EvalResult out;
  out.episodes = episodes;
  out.returns.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng = make_rng(seed, "episode", e);
    try {
      const auto& ctx = online.users[uniform_index(rng, online.users.size())];
      out.returns.push_back(run_episode(policy, *online.env, ctx, rng));
    } catch (const Error& err) {
      throw EpisodeError(e, err);
    }
  }
  out.mean = stats::mean(out.returns);
  out.std = stats::population_std(out.returns);
  return out;
}

inline nlohmann::json to_json(const EvalResult& r, const std::string& policy) {
  return nlohmann::json{{"policy", policy},
                        {"episodes", r.episodes},
                        {"mean", r.mean},
                        {"std", r.std},
                        {"summary", r.summary()}};
}

}  // namespace slaterl
