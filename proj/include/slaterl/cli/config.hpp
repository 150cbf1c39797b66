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

// Flat run configuration. Files hold "key = value" lines, '#' starts a
// comment; flags override file values; unknown keys are rejected.
//
// Every random stream derives from `seed`: derive_seed(seed, component),
// with components "world", "logs", "rl-logs", "pad", "split", "sim",
// "learn", "pg", "eval", "cpe", "serve".

#pragma once

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/cpe/estimators.hpp"
#include "slaterl/logged_data/split.hpp"
#include "slaterl/policies/bc.hpp"
#include "slaterl/policies/reinforce.hpp"
#include "slaterl/synth/world.hpp"
#include "slaterl/understanding/report.hpp"
#include "slaterl/understanding/seq_model.hpp"
#include "slaterl/user_model/model.hpp"

namespace slaterl::cli {

struct RunConfig {
  std::uint64_t seed = 0;
  synth::WorldParams world;
  std::size_t max_pages = 4;
  double page_gamma = 0.95;

  double behavior_temperature = 3.0;
  bool behavior_history_aware = false;
  std::size_t sessions = 2000;
  std::size_t rl_sessions = 0;
  double rl_temperature = 1.0;

  std::string split_mode = "by-user";
  double test_fraction = 0.2;
  std::int64_t split_cutoff = 0;  // by-time; 0 means unset

  UserModelConfig sim;
  understanding::SeqConfig seq;
  understanding::UnderstandConfig understand;
  std::size_t understand_users = 0;  // 0: every test user

  LearnerConfig learn;
  ReinforceConfig pg;

  std::size_t eval_episodes = 2000;
  std::string eval_env = "world";  // or "sim"

  double cpe_gamma = 1.0;
  cpe::Clip clip;
  std::size_t cpe_rollouts = 8;
  std::size_t cpe_horizon = 0;

  std::string serve_host = "127.0.0.1";
  std::size_t serve_port = 0;  // 0: any free port

  using Slot = std::variant<double*, std::uint64_t*, std::int64_t*, bool*, std::string*>;

  std::vector<std::pair<std::string, Slot>> slots() {
    return {
        {"seed", &seed},
        {"world.n_items", &world.n_items},
        {"world.n_users", &world.n_users},
        {"world.portrait_dim", &world.portrait_dim},
        {"world.click_dim", &world.click_dim},
        {"world.item_dim", &world.item_dim},
        {"world.n_series", &world.n_series},
        {"world.page_size", &world.page_size},
        {"world.row_width", &world.row_width},
        {"world.utility_lo", &world.utility_lo},
        {"world.utility_hi", &world.utility_hi},
        {"world.bias_mean", &world.bias_mean},
        {"world.bias_spread", &world.bias_spread},
        {"world.affinity_scale", &world.affinity_scale},
        {"world.decoy", &world.decoy},
        {"world.position_decay", &world.position_decay},
        {"world.lt_coef", &world.lt_coef},
        {"world.exposure_weight", &world.exposure_weight},
        {"world.teaser_utility", &world.teaser_utility},
        {"world.teaser_bias", &world.teaser_bias},
        {"world.sequel_utility", &world.sequel_utility},
        {"world.sequel_bias", &world.sequel_bias},
        {"world.continue_bias", &world.continue_bias},
        {"world.continue_slope", &world.continue_slope},
        {"episode.max_pages", &max_pages},
        {"episode.gamma", &page_gamma},
        {"behavior.temperature", &behavior_temperature},
        {"behavior.history_aware", &behavior_history_aware},
        {"behavior.rl_temperature", &rl_temperature},
        {"logs.sessions", &sessions},
        {"logs.rl_sessions", &rl_sessions},
        {"split.mode", &split_mode},
        {"split.test_fraction", &test_fraction},
        {"split.cutoff", &split_cutoff},
        {"sim.hidden", &sim.hidden},
        {"sim.l2", &sim.l2},
        {"sim.epochs", &sim.epochs},
        {"sim.learning_rate", &sim.learning_rate},
        {"sim.item_onehot", &sim.item_onehot},
        {"sim.interaction", &sim.interaction},
        {"sim.history", &sim.history},
        {"understand.K", &seq.K},
        {"understand.epochs", &seq.epochs},
        {"understand.learning_rate", &seq.learning_rate},
        {"understand.l2", &seq.l2},
        {"understand.width", &understand.width},
        {"understand.hot_size", &understand.hot_size},
        {"understand.users", &understand_users},
        {"learn.learning_rate", &learn.learning_rate},
        {"learn.epochs", &learn.epochs},
        {"learn.gamma", &learn.gamma},
        {"learn.bcq_threshold", &learn.bcq_threshold},
        {"learn.l2", &learn.l2},
        {"learn.fqi_iterations", &learn.fqi_iterations},
        {"learn.ridge", &learn.ridge},
        {"pg.learning_rate", &pg.learning_rate},
        {"pg.iterations", &pg.iterations},
        {"pg.batch", &pg.batch},
        {"pg.gamma", &pg.gamma},
        {"pg.l2", &pg.l2},
        {"pg.max_grad_norm", &pg.max_grad_norm},
        {"eval.episodes", &eval_episodes},
        {"eval.env", &eval_env},
        {"cpe.gamma", &cpe_gamma},
        {"cpe.clip_lo", &clip.lo},
        {"cpe.clip_hi", &clip.hi},
        {"cpe.rollouts", &cpe_rollouts},
        {"cpe.horizon", &cpe_horizon},
        {"serve.host", &serve_host},
        {"serve.port", &serve_port},
    };
  }

  void set(std::string_view key, std::string_view value) {
    for (auto& [name, slot] : slots()) {
      if (name != key) continue;
      const std::string v(text::trim(value));
      const auto bad = [&] { return ConfigError("bad value '" + v + "' for " + name); };
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) {
              auto x = text::parse_double(v);
              if (!x) throw bad();
              *p = *x;
            } else if constexpr (std::is_same_v<T, bool>) {
              if (v == "true" || v == "1") *p = true;
              else if (v == "false" || v == "0") *p = false;
              else throw bad();
            } else if constexpr (std::is_same_v<T, std::string>) {
              *p = v;
            } else {
              auto x = text::parse_int<T>(v);
              if (!x) throw bad();
              *p = *x;
            }
          },
          slot);
      return;
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }

  /// "key=value" as given on the command line.
  void set_assignment(std::string_view kv) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(kv) + "'");
    set(text::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }

  void merge_text(std::string_view content, const std::string& origin = "config") {
    std::size_t line_no = 0;
    for (auto line : text::split(content, '\n')) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string_view::npos) line = line.substr(0, hash);
      line = text::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
      }
      try {
        set(text::trim(line.substr(0, eq)), line.substr(eq + 1));
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  void merge_file(const std::filesystem::path& path) { merge_text(text::read_file(path), path.string()); }

  /// Every key with its value, in declaration order; loads back to the same config.
  std::string resolved() {
    std::ostringstream out;
    for (auto& [name, slot] : slots()) {
      out << name << " = ";
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) out << text::format_double(*p);
            else if constexpr (std::is_same_v<T, bool>) out << (*p ? "true" : "false");
            else out << *p;
          },
          slot);
      out << '\n';
    }
    return out.str();
  }

  std::uint64_t stream(std::string_view component) const { return derive_seed(seed, component); }

  SplitMode split() const { return parse_split_mode(split_mode); }

  void validate() const {
    world.validate();
    if (max_pages == 0) throw ConfigError("episode.max_pages must be at least 1");
    if (!(page_gamma > 0.0 && page_gamma <= 1.0)) throw ConfigError("episode.gamma must be in (0, 1]");
    if (eval_env != "world" && eval_env != "sim") throw ConfigError("eval.env must be world or sim");
    parse_split_mode(split_mode);
  }
};

}  // namespace slaterl::cli
