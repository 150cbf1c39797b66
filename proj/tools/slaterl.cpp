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

// Command line front end: `slaterl <subcommand> [options]`.

#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "slaterl/cli/commands.hpp"
#include "slaterl/cli/env_server.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

int serve_env(slaterl::cli::RunConfig& cfg, const slaterl::cli::Paths& paths) {
  using namespace slaterl::cli;
  cfg.validate();
  const auto src = env_source(cfg, paths, paths.world.empty() ? "sim" : "world");
  const slaterl::SlateEnv env(*src.model, src.catalog, episode_of(cfg));
  EnvServer server(env, src.users);
  const auto port = server.start(cfg.serve_host, static_cast<std::uint16_t>(cfg.serve_port));
  std::cout << "listening " << cfg.serve_host << ":" << port << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace slaterl;
  CLI::App app{"slate recommendation toolkit"};
  app.require_subcommand(1);

  cli::Paths paths;
  std::vector<std::string> config_files;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint16_t> port;

  const std::vector<std::string> names = {"gen",      "validate", "transform", "split",       "fit-sim",
                                          "eval-sim", "understand", "train-bc", "train-bcq", "train-pg",
                                          "eval-online", "cpe",     "serve-env"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_files, "key = value file, later files win")->check(CLI::ExistingFile);
    sub->add_option("--set", assignments, "key=value override, applied after config files");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", paths.out, "output directory");
    sub->add_option("--world", paths.world);
    sub->add_option("--catalog", paths.catalog);
    sub->add_option("--log", paths.log);
    sub->add_option("--test-log", paths.test_log);
    sub->add_option("--samples", paths.samples);
    sub->add_option("--model", paths.model);
    sub->add_option("--policy", paths.policies, "checkpoint path, builtin:uniform or builtin:myopic-greedy");
    sub->add_option("--port", port);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    cli::RunConfig cfg;
    for (const auto& f : config_files) cfg.merge_file(f);
    for (const auto& a : assignments) cfg.set_assignment(a);
    if (seed) cfg.seed = *seed;
    if (port) cfg.serve_port = *port;
    if (command == "serve-env") return serve_env(cfg, paths);
    std::cout << cli::run(command, cfg, paths) << "\n";
    return 0;
  } catch (const Error& e) {
    nlohmann::json rec = {{"command", command}, {"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
    std::cerr << rec.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json rec = {{"command", command}, {"error", "internal"}, {"message", e.what()}};
    std::cerr << rec.dump() << "\n";
    return 3;
  }
}
