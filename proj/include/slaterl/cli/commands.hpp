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

// Pipeline subcommands. Each reads the documented files, writes its outputs
// under `out` with write-then-rename, and records the resolved config as
// <subcommand>.config next to them.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/cli/config.hpp"
#include "slaterl/cpe/report.hpp"
#include "slaterl/cpe/trajectory.hpp"
#include "slaterl/logged_data/log_format.hpp"
#include "slaterl/logged_data/mdp.hpp"
#include "slaterl/logged_data/session.hpp"
#include "slaterl/logged_data/split.hpp"
#include "slaterl/policies/batch_q.hpp"
#include "slaterl/policies/bc.hpp"
#include "slaterl/policies/checkpoint.hpp"
#include "slaterl/policies/evaluate.hpp"
#include "slaterl/policies/reinforce.hpp"
#include "slaterl/synth/simulate.hpp"
#include "slaterl/synth/world.hpp"
#include "slaterl/understanding/report.hpp"
#include "slaterl/understanding/seq_model.hpp"
#include "slaterl/user_model/metrics.hpp"
#include "slaterl/user_model/model.hpp"
#include "slaterl/user_model/value_model.hpp"

namespace slaterl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Input and output locations; which ones a subcommand needs is checked there.
struct Paths {
  fs::path out = "out";
  fs::path world;
  fs::path catalog;
  fs::path log;
  fs::path test_log;
  fs::path samples;
  fs::path model;
  std::vector<std::string> policies;  // checkpoint paths or builtin:uniform, builtin:myopic-greedy
};

inline const fs::path& need(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string("missing --") + flag);
  if (!fs::exists(p)) throw IoError("no such file: " + p.string());
  return p;
}

inline EpisodeConfig episode_of(const RunConfig& cfg) {
  EpisodeConfig ep;
  ep.gamma = cfg.page_gamma;
  ep.page_size = cfg.world.page_size;
  ep.row_width = cfg.world.row_width;
  ep.max_pages = cfg.max_pages;
  ep.validate();
  return ep;
}

inline Catalog load_catalog(const fs::path& p) {
  std::istringstream in(text::read_file(p));
  return read_catalog(in);
}

inline synth::WorldSpec load_world(const fs::path& p) {
  std::istringstream in(text::read_file(p));
  return synth::read_world(in);
}

inline std::vector<LoggedRow> load_log(const fs::path& p, const RunConfig& cfg) {
  std::istringstream in(text::read_file(p));
  LogSchema schema;
  schema.page_size = cfg.world.page_size;
  schema.row_width = cfg.world.row_width;
  return parse_log(in, schema);
}

inline std::string to_text(const std::vector<LoggedRow>& rows) { return log_to_string(rows); }

/// Distinct user contexts in order of first appearance.
inline std::vector<std::vector<double>> users_of(const std::vector<LoggedRow>& rows) {
  std::vector<std::vector<double>> out;
  std::set<std::vector<double>> seen;
  for (const auto& r : rows) {
    std::vector<double> ctx(r.user_portrait);
    ctx.insert(ctx.end(), r.click_history.begin(), r.click_history.end());
    if (seen.insert(ctx).second) out.push_back(std::move(ctx));
  }
  return out;
}

inline std::vector<SessionRecord> sessions_of(const std::vector<LoggedRow>& rows, const Catalog& catalog,
                                              const RunConfig& cfg) {
  return sessionize_and_pad(rows, cfg.max_pages, catalog, cfg.stream("pad"));
}

/// Response model plus the population episodes start from: the true world
/// (--world) or a fitted simulator (--model with --catalog, users from --log).
struct EnvSource {
  std::unique_ptr<ResponseModel> model;
  Catalog catalog;
  std::vector<std::vector<double>> users;
  const synth::World* world = nullptr;
};

inline EnvSource env_source(const RunConfig& cfg, const Paths& paths, const std::string& kind) {
  EnvSource src;
  if (kind == "world") {
    auto spec = load_world(need(paths.world, "world"));
    src.catalog = spec.catalog;
    src.users = spec.users;
    auto w = std::make_unique<synth::World>(std::move(spec));
    src.world = w.get();
    src.model = std::move(w);
  } else {
    src.catalog = load_catalog(need(paths.catalog, "catalog"));
    src.model = std::make_unique<UserModel>(
        UserModel::load(text::read_file(need(paths.model, "model")), src.catalog));
    src.users = users_of(load_log(need(paths.log, "log"), cfg));
  }
  if (src.users.empty()) throw EmptyDataError("no users to start episodes from");
  return src;
}

inline FeatureSpec policy_spec(const Catalog& catalog, std::size_t user_dim, const RunConfig& cfg) {
  return FeatureSpec::for_catalog(catalog, user_dim, episode_of(cfg));
}

inline std::vector<MdpSample> load_samples(const fs::path& p) {
  std::istringstream in(text::read_file(p));
  return read_samples(in);
}

inline std::size_t user_dim_of(const std::vector<MdpSample>& samples, const EpisodeConfig& ep) {
  if (samples.empty()) throw EmptyDataError("no samples");
  return decode_state(samples.front().state, ep).user_context.size();
}

inline std::shared_ptr<Policy> resolve_policy(const std::string& ref, const Catalog& catalog,
                                              const synth::World* world) {
  if (ref == "builtin:uniform") return std::make_shared<UniformPolicy>();
  if (ref == "builtin:myopic-greedy") {
    if (!world) throw ConfigError("builtin:myopic-greedy needs the world environment");
    return std::make_shared<synth::MyopicGreedyPolicy>(*world);
  }
  return load_policy(text::read_file(need(ref, "policy")), catalog);
}

class Output {
 public:
  Output(fs::path dir, std::string command, RunConfig& cfg) : dir_(std::move(dir)), command_(std::move(command)) {
    fs::create_directories(dir_);
    text::atomic_write(dir_ / (command_ + ".config"), cfg.resolved());
  }
  void write(const std::string& name, const std::string& content) {
    text::atomic_write(dir_ / name, content);
    written_.push_back(name);
  }
  void json_file(const std::string& name, const json& j) { write(name, j.dump(1) + "\n"); }
  std::string summary() const {
    std::string s = command_ + ":";
    for (const auto& w : written_) s += " " + (dir_ / w).string();
    return s;
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> written_;
};

inline std::string cmd_gen(RunConfig& cfg, const Paths& paths) {
  Output out(paths.out, "gen", cfg);
  synth::WorldParams wp = cfg.world;
  wp.seed = cfg.stream("world");
  const synth::World world(synth::generate_world(wp));
  synth::AttractionPolicy sl(world, cfg.behavior_temperature, "sl", cfg.behavior_history_aware);
  synth::GenConfig g;
  g.sessions = cfg.sessions;
  g.max_pages = cfg.max_pages;
  g.seed = cfg.stream("logs");
  g.policy_id = "sl";
  auto rows = synth::simulate_logs(world, sl, g);
  if (cfg.rl_sessions) {
    synth::AttractionPolicy rl(world, cfg.rl_temperature, "rl", cfg.behavior_history_aware);
    synth::GenConfig gr = g;
    gr.sessions = cfg.rl_sessions;
    gr.seed = cfg.stream("rl-logs");
    gr.policy_id = "rl";
    gr.session_offset = cfg.sessions;
    auto more = synth::simulate_logs(world, rl, gr);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  out.write("world.txt", synth::world_to_string(world.spec()));
  std::ostringstream cat;
  write_catalog(cat, world.catalog());
  out.write("catalog.tsv", cat.str());
  out.write("logs.tsv", to_text(rows));
  out.write("log_stats.tsv", synth::stats_table(synth::log_stats(rows, world.catalog())));
  return out.summary();
}

inline std::string cmd_validate(RunConfig& cfg, const Paths& paths) {
  const auto rows = load_log(need(paths.log, "log"), cfg);
  std::map<std::string, std::size_t> per_policy;
  std::set<std::string> sessions;
  std::size_t purchases = 0;
  for (const auto& r : rows) {
    ++per_policy[r.behavior_policy_id];
    sessions.insert(r.session_id);
    for (auto f : r.user_feedback) purchases += f;
  }
  if (!paths.catalog.empty()) {
    const Catalog catalog = load_catalog(need(paths.catalog, "catalog"));
    for (const auto& r : rows) {
      for (ItemId id : r.exposed_items) {
        if (!catalog.contains(id)) {
          throw CatalogError("session " + r.session_id + " shows unknown item " + std::to_string(id));
        }
      }
    }
  }
  Output out(paths.out, "validate", cfg);
  out.json_file("validate.json", {{"valid", true},
                                  {"rows", rows.size()},
                                  {"sessions", sessions.size()},
                                  {"purchases", purchases},
                                  {"rows_per_policy", per_policy}});
  return out.summary();
}

inline std::string cmd_transform(RunConfig& cfg, const Paths& paths) {
  const Catalog catalog = load_catalog(need(paths.catalog, "catalog"));
  const auto rows = load_log(need(paths.log, "log"), cfg);
  const auto sessions = sessions_of(rows, catalog, cfg);
  const EpisodeConfig ep = episode_of(cfg);
  std::vector<MdpSample> samples;
  for (const auto& s : sessions) {
    auto m = to_mdp_samples(s, ep, catalog);
    samples.insert(samples.end(), m.begin(), m.end());
  }
  Output out(paths.out, "transform", cfg);
  out.write("mdp.jsonl", samples_to_string(samples));
  out.write("trajectories.jsonl",
            cpe::trajectories_to_string(cpe::trajectories_from_sessions(sessions, ep, catalog), ep));
  return out.summary();
}

inline std::string cmd_split(RunConfig& cfg, const Paths& paths) {
  const auto rows = load_log(need(paths.log, "log"), cfg);
  SplitParams sp;
  sp.test_fraction = cfg.test_fraction;
  sp.seed = cfg.stream("split");
  if (cfg.split_cutoff != 0) sp.cutoff = cfg.split_cutoff;
  const auto split = split_dataset(rows, cfg.split(), sp);
  Output out(paths.out, "split", cfg);
  out.write("train.tsv", to_text(split.train));
  out.write("test.tsv", to_text(split.test));
  out.json_file("split.json", {{"mode", cfg.split_mode},
                               {"train_rows", split.train.size()},
                               {"test_rows", split.test.size()}});
  return out.summary();
}

inline std::string cmd_fit_sim(RunConfig& cfg, const Paths& paths) {
  const Catalog catalog = load_catalog(need(paths.catalog, "catalog"));
  const auto sessions = sessions_of(load_log(need(paths.log, "log"), cfg), catalog, cfg);
  UserModelConfig mc = cfg.sim;
  mc.seed = cfg.stream("sim");
  auto [model, report] = fit_user_model(page_records(sessions), catalog, episode_of(cfg), mc);
  Output out(paths.out, "fit-sim", cfg);
  out.write("user_model.json", model.save());
  out.json_file("fit_sim.json", {{"epochs_run", report.epochs_run},
                                 {"final_loss", report.final_loss},
                                 {"item_examples", report.item_examples},
                                 {"continue_examples", report.continue_examples},
                                 {"loss_curve", report.loss_curve}});
  return out.summary();
}

inline std::string cmd_eval_sim(RunConfig& cfg, const Paths& paths) {
  const Catalog catalog = load_catalog(need(paths.catalog, "catalog"));
  const UserModel model = UserModel::load(text::read_file(need(paths.model, "model")), catalog);
  const auto test = page_records(sessions_of(load_log(need(paths.log, "log"), cfg), catalog, cfg));
  const EpisodeConfig ep = episode_of(cfg);
  const auto m = evaluate_user_model(model, catalog, ep, test);
  std::string table = metrics_table("simulator", m);
  json j = {{"simulator", to_json(m)}};
  if (!paths.world.empty()) {
    // the generating world scored on the same pages, as a reference row
    const synth::World world(load_world(need(paths.world, "world")));
    const auto w = evaluate_user_model(world, catalog, ep, test);
    table += "\n" + metrics_table("world", w);
    j["world"] = to_json(w);
  }
  Output out(paths.out, "eval-sim", cfg);
  out.write("eval_sim.tsv", table);
  out.json_file("eval_sim.json", j);
  return out.summary();
}

inline std::string cmd_understand(RunConfig& cfg, const Paths& paths) {
  const Catalog catalog = load_catalog(need(paths.catalog, "catalog"));
  const auto train_rows = load_log(need(paths.log, "log"), cfg);
  const auto fit = understanding::fit_seq_model(sessions_of(train_rows, catalog, cfg), catalog, cfg.seq);
  auto users = users_of(paths.test_log.empty() ? train_rows : load_log(need(paths.test_log, "test-log"), cfg));
  if (cfg.understand_users && users.size() > cfg.understand_users) users.resize(cfg.understand_users);
  understanding::UnderstandConfig uc = cfg.understand;
  uc.K = cfg.seq.K;
  const auto rep = understanding::understanding_report(fit.model, users, uc);
  const std::string name = cfg.world.lt_coef != 0.0 ? "long-term" : "myopic";
  Output out(paths.out, "understand", cfg);
  out.write("understand.tsv", understanding::score_table({{name, rep}}) + "\n" +
                                  understanding::correlation_table({{name, rep}}));
  json j = understanding::to_json(rep);
  j["sessions_used"] = fit.sessions_used;
  j["sessions_skipped"] = fit.sessions_skipped;
  j["final_loss"] = fit.descent.final_loss;
  out.json_file("understand.json", j);
  return out.summary();
}

inline LearnerConfig learner_of(const RunConfig& cfg) {
  LearnerConfig lc = cfg.learn;
  lc.seed = cfg.stream("learn");
  return lc;
}

inline std::string cmd_train_bc(RunConfig& cfg, const Paths& paths) {
  const Catalog catalog = load_catalog(need(paths.catalog, "catalog"));
  const auto samples = load_samples(need(paths.samples, "samples"));
  const EpisodeConfig ep = episode_of(cfg);
  const auto r = bc_fit(samples, catalog, ep, policy_spec(catalog, user_dim_of(samples, ep), cfg), learner_of(cfg));
  Output out(paths.out, "train-bc", cfg);
  out.write("bc.json", save_policy(r.policy));
  out.json_file("train_bc.json", {{"loss_curve", r.fit.loss_curve}, {"final_loss", r.fit.final_loss}});
  return out.summary();
}

inline std::string cmd_train_bcq(RunConfig& cfg, const Paths& paths) {
  const Catalog catalog = load_catalog(need(paths.catalog, "catalog"));
  const auto samples = load_samples(need(paths.samples, "samples"));
  const EpisodeConfig ep = episode_of(cfg);
  const LearnerConfig lc = learner_of(cfg);
  const auto bc = bc_fit(samples, catalog, ep, policy_spec(catalog, user_dim_of(samples, ep), cfg), lc);
  const auto r = batch_q_learn(samples, catalog, ep, bc.policy, lc);
  Output out(paths.out, "train-bcq", cfg);
  out.write("bcq.json", save_policy(r.policy));
  out.json_file("train_bcq.json", {{"fallbacks", r.fallbacks}, {"weight_change", r.weight_change}});
  return out.summary();
}

inline std::string cmd_train_pg(RunConfig& cfg, const Paths& paths) {
  const auto src = env_source(cfg, paths, paths.world.empty() ? "sim" : "world");
  const SlateEnv env(*src.model, src.catalog, episode_of(cfg));
  const OnlineEnv online{&env, src.users};
  ReinforceConfig pc = cfg.pg;
  pc.seed = cfg.stream("pg");
  LinearSoftmaxPolicy init(src.catalog, policy_spec(src.catalog, src.users.front().size(), cfg), {}, "pg");
  const auto r = reinforce_online(online, init, pc);
  Output out(paths.out, "train-pg", cfg);
  out.write("pg.json", save_policy(r.policy));
  out.json_file("train_pg.json", {{"curve", r.curve}});
  return out.summary();
}

inline std::string cmd_eval_online(RunConfig& cfg, const Paths& paths) {
  if (paths.policies.empty()) throw ConfigError("missing --policy");
  const auto src = env_source(cfg, paths, cfg.eval_env);
  const SlateEnv env(*src.model, src.catalog, episode_of(cfg));
  const OnlineEnv online{&env, src.users};
  std::string table = "policy\treturn\n";
  json j = json::array();
  for (const auto& ref : paths.policies) {
    const auto policy = resolve_policy(ref, src.catalog, src.world);
    const auto r = evaluate_online(*policy, online, cfg.eval_episodes, cfg.stream("eval"));
    table += policy->name() + "\t" + r.summary() + "\n";
    j.push_back(to_json(r, policy->name()));
  }
  Output out(paths.out, "eval-online", cfg);
  out.write("eval_online.tsv", table);
  out.json_file("eval_online.json", j);
  return out.summary();
}

inline std::string cmd_cpe(RunConfig& cfg, const Paths& paths) {
  if (paths.policies.empty()) throw ConfigError("missing --policy");
  // value models come from the fitted simulator, or the world if given
  const auto src = env_source(cfg, paths, paths.world.empty() ? "sim" : "world");
  const EpisodeConfig ep = episode_of(cfg);
  const auto test_path = paths.test_log.empty() ? paths.log : paths.test_log;
  const auto sessions = sessions_of(load_log(need(test_path, "test-log"), cfg), src.catalog, cfg);
  const auto trajs = cpe::trajectories_from_sessions(sessions, ep, src.catalog);
  RolloutConfig rc;
  rc.samples = cfg.cpe_rollouts;
  rc.horizon = cfg.cpe_horizon;
  rc.gamma = cfg.cpe_gamma;
  rc.seed = cfg.stream("cpe");
  const ValueModel vm(*src.model, src.catalog, ep, rc);
  std::vector<cpe::CpeReport> reports;
  json j = json::array();
  for (const auto& ref : paths.policies) {
    const auto policy = resolve_policy(ref, src.catalog, src.world);
    reports.push_back(cpe::evaluate_cpe(trajs, *policy, cpe::model_values(vm, *policy),
                                        cpe::CpeConfig{cfg.cpe_gamma, cfg.clip}));
    j.push_back(cpe::to_json(reports.back()));
  }
  Output out(paths.out, "cpe", cfg);
  out.write("cpe.tsv", cpe::cpe_table(reports));
  out.json_file("cpe.json", j);
  return out.summary();
}

using Command = std::function<std::string(RunConfig&, const Paths&)>;

inline const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"gen", cmd_gen},
      {"validate", cmd_validate},
      {"transform", cmd_transform},
      {"split", cmd_split},
      {"fit-sim", cmd_fit_sim},
      {"eval-sim", cmd_eval_sim},
      {"understand", cmd_understand},
      {"train-bc", cmd_train_bc},
      {"train-bcq", cmd_train_bcq},
      {"train-pg", cmd_train_pg},
      {"eval-online", cmd_eval_online},
      {"cpe", cmd_cpe},
  };
  return table;
}

/// Runs a file-producing subcommand (everything except serve-env).
inline std::string run(const std::string& name, RunConfig& cfg, const Paths& paths) {
  const auto& table = commands();
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown subcommand '" + name + "'");
  cfg.validate();
  return it->second(cfg, paths);
}

}  // namespace slaterl::cli
