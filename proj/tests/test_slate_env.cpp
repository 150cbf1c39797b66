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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slaterl/core/stats.hpp"
#include "slaterl/slate_env/env.hpp"
#include "oracles.hpp"

namespace slaterl {
namespace {

// Item i is bought with probability base[i] once unlocked, shifted by the
// first context coordinate and by the page index.
class TableModel : public ResponseModel {
 public:
  TableModel(std::vector<double> base, double cont) : base_(std::move(base)), cont_(cont) {}
  std::size_t user_dim() const override { return 2; }
  std::vector<double> conditional_probs(const SlateState& s,
                                        std::span<const ItemId> slate) const override {
    std::vector<double> out;
    for (ItemId id : slate) {
      double p = base_[static_cast<std::size_t>(id)] + 0.1 * s.user_context[0] -
                 0.05 * static_cast<double>(s.page_index);
      out.push_back(std::clamp(p, 0.0, 1.0));
    }
    return out;
  }
  double continue_prob(const SlateState&) const override { return cont_; }

 private:
  std::vector<double> base_;
  double cont_;
};

Catalog catalog_of(std::size_t n, double utility) {
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({static_cast<ItemId>(i), utility, {static_cast<double>(i)}});
  }
  return Catalog(items);
}

Catalog varied_catalog(std::size_t n) {
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({static_cast<ItemId>(i), 5.0 + 3.0 * static_cast<double>(i % 7), {0.0}});
  }
  return Catalog(items);
}

std::vector<double> base_probs(std::size_t n) {
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = 0.3 + 0.6 * static_cast<double>(i % 5) / 4.0;
  return b;
}

TEST(PageReward, Examples) {
  std::vector<double> ones(9, 1.0), tens(9, 10.0), halves(9, 0.5), zeros(9, 0.0);
  EXPECT_EQ(page_reward(ones, tens, 1.0), 90.0);
  const double closed = 5.0 * (1.0 - std::pow(0.95, 9)) / 0.05;
  EXPECT_NEAR(page_reward(halves, tens, 0.95), closed, 1e-9);
  EXPECT_NEAR(page_reward(halves, tens, 0.95), oracle::constant_page_reward(0.5, 10, 0.95, 9),
              1e-9);
  // 0.95^9 = 0.630249..., so the sum is 36.975...
  EXPECT_NEAR(closed, 36.97505902753909, 1e-12);
  EXPECT_EQ(page_reward(zeros, tens, 0.95), 0.0);
  std::vector<double> eight(8, 1.0);
  EXPECT_THROW(page_reward(eight, tens, 0.95), ContractError);
  std::vector<double> bad = ones;
  bad[3] = 1.5;
  EXPECT_THROW(page_reward(bad, tens, 0.95), ContractError);
}

TEST(EpisodeConfig, Validation) {
  EpisodeConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(EpisodeConfig::seqslate().horizon(), 36u);
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = EpisodeConfig{};
  cfg.page_size = 0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = EpisodeConfig{};
  cfg.max_pages = 0;
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(ClassDistribution, DegenerateAndGenericCases) {
  UnlockLayout layout;
  std::vector<double> ones(9, 1.0), zeros(9, 0.0);
  auto all = class_distribution(ones, layout);
  EXPECT_EQ(all[pattern_index(Feedback(9, 1))], 1.0);
  auto none = class_distribution(zeros, layout);
  EXPECT_EQ(none[pattern_index(Feedback(9, 0))], 1.0);
  std::vector<double> q = {0.3, 0.9, 0.5, 0.7, 0.2, 0.6, 0.8, 0.4, 0.55};
  auto dist = class_distribution(q, layout);
  EXPECT_EQ(dist.size(), 22u);
  EXPECT_NEAR(std::accumulate(dist.begin(), dist.end(), 0.0), 1.0, 1e-12);
  for (double p : dist) EXPECT_GT(p, 0.0);
  EXPECT_THROW(class_distribution(std::vector<double>(8, 0.5), layout), ContractError);
}

TEST(ClassDistribution, MarginalsAgreeWithRowProducts) {
  std::vector<double> q = {0.3, 0.9, 0.5, 0.7, 0.2, 0.6, 0.8, 0.4, 0.55};
  auto m = pattern_marginals(class_distribution(q, UnlockLayout{}), UnlockLayout{});
  const double row1 = q[0] * q[1] * q[2];
  const double row2 = q[3] * q[4] * q[5];
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m[i], q[i], 1e-12);
  for (int i = 3; i < 6; ++i) EXPECT_NEAR(m[i], q[i] * row1, 1e-12);
  for (int i = 6; i < 9; ++i) EXPECT_NEAR(m[i], q[i] * row1 * row2, 1e-12);
}

TEST(SlateEnv, ResetAndMask) {
  TableModel model(base_probs(30), 0.5);
  Catalog cat = catalog_of(30, 10.0);
  SlateEnv env(model, cat, EpisodeConfig::slate());
  std::vector<double> ctx = {0.0, 1.0};
  SlateState s = env.reset(ctx);
  EXPECT_EQ(s.step_index, 0u);
  EXPECT_EQ(s.page_index, 0u);
  EXPECT_TRUE(s.chosen_items.empty());
  EXPECT_EQ(env.action_mask(s).size(), 30u);
  std::vector<double> wrong = {1.0};
  EXPECT_THROW(env.reset(wrong), ContractError);
  Rng rng(1);
  for (ItemId a : {4, 9, 2}) s = env.step(s, a, rng).next_state;
  auto mask = env.action_mask(s);
  EXPECT_EQ(mask.size(), 27u);
  EXPECT_EQ(std::count(mask.begin(), mask.end(), 9), 0);
  EXPECT_THROW(env.step(s, 9, rng), InvalidActionError);
  EXPECT_THROW(env.step(s, 99, rng), InvalidActionError);

  EpisodeConfig loose = EpisodeConfig::slate();
  loose.distinct_within_page = false;
  SlateEnv env2(model, cat, loose);
  EXPECT_EQ(env2.action_mask(s).size(), 30u);
}

TEST(SlateEnv, MidPageStepsAreDeterministicAndSilent) {
  TableModel model(base_probs(30), 0.5);
  Catalog cat = catalog_of(30, 10.0);
  SlateEnv env(model, cat, EpisodeConfig::slate());
  std::vector<double> ctx = {0.0, 1.0};
  SlateState s = env.reset(ctx);
  Rng r1(1), r2(2);
  auto a = env.step(s, 3, r1);
  auto b = env.step(s, 3, r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.reward, 0.0);
  EXPECT_FALSE(a.done);
  EXPECT_EQ(a.next_state.step_index, 1u);
  EXPECT_TRUE(a.feedback.empty());
}

TEST(SlateEnv, FullPurchaseNinthStep) {
  TableModel model(std::vector<double>(30, 1.0), 0.0);
  Catalog cat = catalog_of(30, 10.0);
  EpisodeConfig cfg = EpisodeConfig::slate();
  cfg.gamma = 1.0;
  SlateEnv env(model, cat, cfg);
  std::vector<double> ctx = {0.0, 0.0};
  SlateState s = env.reset(ctx);
  Rng rng(5);
  StepResult r;
  for (ItemId a = 0; a < 9; ++a) {
    r = env.step(s, a, rng);
    s = r.next_state;
  }
  EXPECT_EQ(r.reward, 90.0);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.feedback, Feedback(9, 1));
  EXPECT_TRUE(s.finished);
  EXPECT_TRUE(env.action_mask(s).empty());
}

TEST(SlateEnv, SeededSessionsRepeat) {
  TableModel model(base_probs(30), 0.7);
  Catalog cat = varied_catalog(30);
  SlateEnv env(model, cat, EpisodeConfig::seqslate());
  std::vector<double> ctx = {0.5, 0.0};
  auto run = [&](std::uint64_t seed) {
    EnvSession session(env, ctx, seed);
    std::vector<StepResult> out;
    ItemId next = 0;
    while (!session.done()) {
      auto mask = session.action_mask();
      out.push_back(session.step(mask[static_cast<std::size_t>(next++) % mask.size()]));
    }
    return out;
  };
  EXPECT_EQ(run(3), run(3));
  auto a = run(3);
  EXPECT_LE(a.size(), 36u);
  for (const auto& r : a) {
    if (r.feedback.empty()) EXPECT_EQ(r.reward, 0.0);
  }
  EXPECT_TRUE(a.back().done);
}

TEST(SlateEnv, SampledFeedbackIsAlwaysValidAndMatchesExpectedReward) {
  TableModel model(base_probs(30), 0.0);
  Catalog cat = varied_catalog(30);
  EpisodeConfig cfg = EpisodeConfig::slate();
  SlateEnv env(model, cat, cfg);
  std::vector<double> ctx = {0.3, 0.0};
  SlateState s = env.reset(ctx);
  std::vector<ItemId> slate = {2, 7, 11, 4, 19, 23, 1, 14, 28};
  Rng unused(0);
  for (std::size_t i = 0; i + 1 < slate.size(); ++i) s = env.step(s, slate[i], unused).next_state;

  auto pred = model.predict(s, slate, cfg.layout());
  const double expected = page_reward(pred.marginals, page_utilities(cat, slate), cfg.gamma);

  Rng rng(77);
  const int n = 10000;
  std::vector<double> rewards;
  rewards.reserve(n);
  for (int k = 0; k < n; ++k) {
    auto r = env.step(s, slate.back(), rng);
    ASSERT_TRUE(validate_feedback(r.feedback));
    rewards.push_back(r.reward);
  }
  const double se = stats::standard_error(rewards);
  EXPECT_GT(se, 0.0);
  EXPECT_NEAR(stats::mean(rewards), expected, 3.0 * se);

  Rng rng2(78);
  auto e = env.step(s, slate.back(), rng2, RewardMode::expected);
  EXPECT_NEAR(e.reward, expected, 1e-12);
}

TEST(SlateEnv, EpisodesNeverExceedTheHorizon) {
  TableModel model(std::vector<double>(30, 0.95), 1.0);
  Catalog cat = varied_catalog(30);
  SlateEnv env(model, cat, EpisodeConfig::seqslate());
  std::vector<double> ctx = {0.0, 0.0};
  EnvSession session(env, ctx, 1);
  std::size_t steps = 0;
  while (!session.done()) {
    session.step(session.action_mask().front());
    ++steps;
  }
  EXPECT_EQ(steps, 36u);
}

TEST(SlateEnv, BatchStepMatchesSingleStepsAndIsolatesErrors) {
  TableModel model(base_probs(30), 0.5);
  Catalog cat = varied_catalog(30);
  SlateEnv env(model, cat, EpisodeConfig::seqslate());
  std::vector<double> ctx = {0.1, 0.0};
  std::vector<SlateState> states;
  std::vector<ItemId> actions;
  for (int k = 0; k < 4; ++k) {
    SlateState s = env.reset(ctx);
    Rng r(0);
    for (int i = 0; i < 8; ++i) s = env.step(s, static_cast<ItemId>(i + k), r).next_state;
    states.push_back(s);
    actions.push_back(static_cast<ItemId>(20 + k));
  }
  auto rngs_for = [](std::size_t n) {
    std::vector<Rng> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(make_rng(9, "batch", i));
    return out;
  };
  auto rngs = rngs_for(4);
  auto batch = env.batch_step(states, actions, rngs);
  ASSERT_EQ(batch.size(), 4u);
  auto fresh = rngs_for(4);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(std::get<StepResult>(batch[i]), env.step(states[i], actions[i], fresh[i]));
  }
  // permuting inputs together with their streams permutes outputs
  std::vector<std::size_t> perm = {2, 0, 3, 1};
  std::vector<SlateState> ps;
  std::vector<ItemId> pa;
  std::vector<Rng> pr;
  auto base = rngs_for(4);
  for (auto i : perm) {
    ps.push_back(states[i]);
    pa.push_back(actions[i]);
    pr.push_back(base[i]);
  }
  auto permuted = env.batch_step(ps, pa, pr);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(std::get<StepResult>(permuted[k]), std::get<StepResult>(batch[perm[k]]));
  }
  // a masked action fails in place
  actions[1] = 1;  // already chosen in state 1
  auto rngs3 = rngs_for(4);
  auto mixed = env.batch_step(states, actions, rngs3);
  EXPECT_TRUE(std::holds_alternative<Error>(mixed[1]));
  EXPECT_EQ(std::get<Error>(mixed[1]).kind(), ErrorKind::invalid_action);
  EXPECT_TRUE(std::holds_alternative<StepResult>(mixed[0]));
  EXPECT_TRUE(std::holds_alternative<StepResult>(mixed[2]));
  // a batch of one is a single step
  std::vector<Rng> one = {make_rng(4, "x")};
  Rng same = make_rng(4, "x");
  auto single = env.batch_step(std::span(states).subspan(0, 1), std::span(actions).subspan(0, 1), one);
  EXPECT_EQ(std::get<StepResult>(single[0]), env.step(states[0], actions[0], same));
}

TEST(StateCodec, RoundTripsAcrossPages) {
  EpisodeConfig cfg = EpisodeConfig::seqslate();
  SlateState s;
  s.user_context = {0.5, -2.0, 3.25};
  s.page_index = 2;
  s.chosen_items = {4, 1};
  s.step_index = 20;
  s.history = {{{0, 1, 2, 3, 4, 5, 6, 7, 8}, {1, 1, 1, 0, 0, 0, 0, 0, 0}},
               {{9, 10, 11, 12, 13, 14, 15, 16, 17}, Feedback(9, 0)}};
  auto v = encode_state(s, cfg);
  EXPECT_EQ(v.size(), encoded_state_size(3, cfg));
  EXPECT_EQ(decode_state(v, cfg), s);
}

}  // namespace
}  // namespace slaterl
