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

#include <numeric>
#include <set>
#include <sstream>

#include "slaterl/logged_data/feedback.hpp"
#include "slaterl/logged_data/log_format.hpp"
#include "slaterl/logged_data/mdp.hpp"
#include "slaterl/logged_data/session.hpp"
#include "slaterl/logged_data/split.hpp"
#include "slaterl/slate_env/episode.hpp"
#include "oracles.hpp"

namespace slaterl {
namespace {

Catalog make_catalog(int n) {
  std::vector<Item> items;
  for (int i = 0; i < n; ++i) items.push_back({i, 1.0 + i, {0.1 * i, -0.2 * i}});
  return Catalog(items);
}

LoggedRow make_row(const std::string& session, int seq, Feedback fb, int first_item = 0) {
  LoggedRow r;
  r.timestamp = 1000 + seq;
  r.session_id = session;
  r.sequence_id = seq;
  for (int i = 0; i < 9; ++i) r.exposed_items.push_back(first_item + i);
  r.user_feedback = std::move(fb);
  r.user_portrait = {0.5, -1.0};
  r.click_history = {2.0};
  r.item_features.assign(18, 0.25);
  r.behavior_policy_id = "sl:softmax";
  r.behavior_action_probs.assign(9, 0.1);
  return r;
}

TEST(Feedback, ExactlyTwentyTwoOfAllPatternsAreValid) {
  int valid = 0;
  for (unsigned mask = 0; mask < 512; ++mask) {
    Feedback fb(9);
    for (int i = 0; i < 9; ++i) fb[i] = (mask >> i) & 1u;
    const bool ours = static_cast<bool>(validate_feedback(fb));
    EXPECT_EQ(ours, oracle::unlock_valid(fb, 3)) << mask;
    valid += ours;
  }
  EXPECT_EQ(valid, 22);
  EXPECT_EQ(valid_patterns().size(), 22u);
}

TEST(Feedback, GeneralLayoutsFollowTheCountFormula) {
  for (std::size_t rows = 1; rows <= 4; ++rows) {
    for (std::size_t w = 1; w <= 4; ++w) {
      UnlockLayout layout{rows, w};
      std::size_t expected = (1u << w) + (rows - 1) * ((1u << w) - 1);
      std::size_t brute = 0;
      for (unsigned mask = 0; mask < (1u << (rows * w)); ++mask) {
        Feedback fb(rows * w);
        for (std::size_t i = 0; i < fb.size(); ++i) fb[i] = (mask >> i) & 1u;
        brute += oracle::unlock_valid(fb, w);
      }
      EXPECT_EQ(brute, expected);
      EXPECT_EQ(valid_patterns(layout).size(), expected);
    }
  }
}

TEST(Feedback, Examples) {
  EXPECT_TRUE(validate_feedback(Feedback{1, 1, 1, 1, 0, 0, 0, 0, 0}));
  auto bad = validate_feedback(Feedback{0, 0, 0, 0, 0, 0, 0, 0, 1});
  EXPECT_FALSE(bad);
  EXPECT_FALSE(bad.reason.empty());
  EXPECT_FALSE(validate_feedback(Feedback{1, 1, 2, 0, 0, 0, 0, 0, 0}));
  EXPECT_THROW(validate_feedback(Feedback{1, 1, 1}), ContractError);
  EXPECT_THROW(pattern_index(Feedback{0, 0, 0, 1, 0, 0, 0, 0, 0}), ValidityError);
  EXPECT_EQ(valid_patterns()[pattern_index(Feedback{1, 1, 1, 0, 1, 0, 0, 0, 0})],
            (Feedback{1, 1, 1, 0, 1, 0, 0, 0, 0}));
}

TEST(ParseLog, RoundTripsAWellFormedLine) {
  LoggedRow r = make_row("s1", 1, {1, 1, 1, 0, 0, 0, 0, 0, 0});
  std::istringstream in(log_to_string({r}));
  auto rows = parse_log(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], r);
  EXPECT_EQ(rows[0].user_feedback, (Feedback{1, 1, 1, 0, 0, 0, 0, 0, 0}));
}

TEST(ParseLog, ShortSlateIsASchemaError) {
  LoggedRow r = make_row("s1", 1, {1, 1, 1, 0, 0, 0, 0, 0, 0});
  r.exposed_items.pop_back();
  std::istringstream in(log_to_string({r}));
  EXPECT_THROW(parse_log(in), SchemaError);
}

TEST(ParseLog, LockedPurchaseIsAValidityErrorCarryingThePattern) {
  LoggedRow r = make_row("s1", 1, {0, 0, 0, 1, 0, 0, 0, 0, 0});
  std::istringstream in(log_to_string({r}));
  try {
    parse_log(in);
    FAIL();
  } catch (const ValidityError& e) {
    EXPECT_EQ(e.pattern(), (Feedback{0, 0, 0, 1, 0, 0, 0, 0, 0}));
  }
}

TEST(ParseLog, MalformedLinesReportTheLineNumber) {
  std::string good = log_to_string({make_row("s1", 1, Feedback(9, 0))});
  std::string row = good.substr(good.find('\n') + 1);
  std::string bad = "10x1" + row.substr(row.find('\t'));
  std::istringstream in(good + bad);
  try {
    parse_log(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream missing(std::string(kLogHeader) + "\n1\ts\t1\n");
  EXPECT_THROW(parse_log(missing), ParseError);
  std::istringstream no_header("1\ts\n");
  EXPECT_THROW(parse_log(no_header), ParseError);
}

TEST(ParseLog, DimensionsMustStayConsistent) {
  LoggedRow a = make_row("s1", 1, Feedback(9, 0));
  LoggedRow b = make_row("s1", 2, Feedback(9, 0));
  b.user_portrait.push_back(1.0);
  std::istringstream in(log_to_string({a, b}));
  EXPECT_THROW(parse_log(in), SchemaError);
  LogSchema fixed;
  fixed.portrait_dim = 42;
  std::istringstream in2(log_to_string({a}));
  EXPECT_THROW(parse_log(in2, fixed), SchemaError);
  LoggedRow c = make_row("s1", 1, Feedback(9, 0));
  c.behavior_action_probs[0] = 0.0;
  std::istringstream in3(log_to_string({c}));
  EXPECT_THROW(parse_log(in3), SchemaError);
  LoggedRow d = make_row("s1", 1, Feedback(9, 0));
  d.exposed_items[1] = d.exposed_items[0];
  std::istringstream in4(log_to_string({d}));
  EXPECT_THROW(parse_log(in4), SchemaError);
}

TEST(Sessionize, PadsShortSessionsWithZeroFeedback) {
  Catalog cat = make_catalog(30);
  std::vector<LoggedRow> rows = {make_row("a", 2, Feedback(9, 0)),
                                 make_row("a", 1, {1, 1, 1, 0, 0, 0, 0, 0, 0})};
  auto sessions = sessionize_and_pad(rows, 4, cat, 9);
  ASSERT_EQ(sessions.size(), 1u);
  const SessionRecord& s = sessions[0];
  EXPECT_EQ(s.pages.size(), 4u);
  EXPECT_EQ(s.padded_page_count, 2u);
  EXPECT_EQ(s.pages[0].feedback, (Feedback{1, 1, 1, 0, 0, 0, 0, 0, 0}));
  for (std::size_t p = 2; p < 4; ++p) {
    EXPECT_TRUE(s.pages[p].padded);
    EXPECT_EQ(s.pages[p].feedback, Feedback(9, 0));
    std::set<ItemId> distinct(s.pages[p].items.begin(), s.pages[p].items.end());
    EXPECT_EQ(distinct.size(), 9u);
    for (std::size_t i = 0; i < 9; ++i) {
      EXPECT_DOUBLE_EQ(s.pages[p].behavior_probs[i], 1.0 / (30.0 - i));
    }
  }
}

TEST(Sessionize, FullSessionsAreUnchanged) {
  Catalog cat = make_catalog(30);
  std::vector<LoggedRow> rows;
  for (int k = 1; k <= 4; ++k) rows.push_back(make_row("a", k, Feedback(9, 0), k));
  auto sessions = sessionize_and_pad(rows, 4, cat, 9);
  EXPECT_EQ(sessions[0].padded_page_count, 0u);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(sessions[0].pages[k].items, rows[k].exposed_items);
}

TEST(Sessionize, IntegrityErrors) {
  Catalog cat = make_catalog(30);
  std::vector<LoggedRow> gap = {make_row("a", 1, Feedback(9, 0)), make_row("a", 3, Feedback(9, 0))};
  EXPECT_THROW(sessionize_and_pad(gap, 4, cat, 1), IntegrityError);
  LoggedRow other = make_row("a", 2, Feedback(9, 0));
  other.user_portrait[0] = 9.0;
  std::vector<LoggedRow> conflict = {make_row("a", 1, Feedback(9, 0)), other};
  EXPECT_THROW(sessionize_and_pad(conflict, 4, cat, 1), IntegrityError);
  std::vector<LoggedRow> unknown = {make_row("a", 1, Feedback(9, 0), 25)};
  EXPECT_THROW(sessionize_and_pad(unknown, 4, cat, 1), CatalogError);
}

TEST(Sessionize, PaddingDependsOnlyOnSeedAndSession) {
  Catalog cat = make_catalog(30);
  std::vector<LoggedRow> one = {make_row("a", 1, Feedback(9, 0))};
  std::vector<LoggedRow> two = {make_row("b", 1, Feedback(9, 0)), make_row("a", 1, Feedback(9, 0))};
  auto x = sessionize_and_pad(one, 4, cat, 5);
  auto y = sessionize_and_pad(two, 4, cat, 5);
  EXPECT_EQ(x[0], y[1]);
  auto z = sessionize_and_pad(one, 4, cat, 6);
  EXPECT_NE(x[0].pages[1].items, z[0].pages[1].items);
}

EpisodeConfig seq_cfg(double gamma = 0.95) {
  EpisodeConfig cfg = EpisodeConfig::seqslate();
  cfg.gamma = gamma;
  return cfg;
}

TEST(MdpSamples, OnePageGivesNineSteps) {
  Catalog cat = make_catalog(30);
  auto sessions = sessionize_and_pad({make_row("a", 1, {1, 1, 1, 1, 0, 0, 0, 0, 0})}, 1, cat, 0);
  EpisodeConfig cfg = EpisodeConfig::slate();
  auto samples = to_mdp_samples(sessions[0], cfg, cat);
  ASSERT_EQ(samples.size(), 9u);
  for (std::size_t t = 0; t < 9; ++t) {
    EXPECT_EQ(samples[t].terminal, t == 8 ? 1 : 0);
    EXPECT_EQ(samples[t].sequence_id, t);
    EXPECT_EQ(samples[t].action_mask.size(), 30u - t);
    EXPECT_DOUBLE_EQ(samples[t].reward, t < 4 ? cat.utility(static_cast<ItemId>(t)) : 0.0);
  }
  EXPECT_EQ(samples[8].next_action, kNoItem);
}

TEST(MdpSamples, FourPageSessionGivesThirtySixChainedSteps) {
  Catalog cat = make_catalog(30);
  std::vector<LoggedRow> rows = {make_row("a", 1, {1, 1, 1, 1, 1, 1, 0, 1, 0}),
                                 make_row("a", 2, {1, 0, 1, 0, 0, 0, 0, 0, 0}, 3)};
  auto sessions = sessionize_and_pad(rows, 4, cat, 3);
  EpisodeConfig cfg = seq_cfg();
  auto samples = to_mdp_samples(sessions[0], cfg, cat);
  ASSERT_EQ(samples.size(), 36u);
  int terminals = 0;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    terminals += samples[t].terminal;
    if (t + 1 < samples.size()) {
      const MdpSample& a = samples[t];
      const MdpSample& b = samples[t + 1];
      EXPECT_EQ(a.next_state, b.state);
      EXPECT_EQ(a.next_observation, b.observation);
      EXPECT_EQ(a.next_action, b.action);
      EXPECT_EQ(a.next_action_probability, b.action_probability);
      EXPECT_EQ(a.next_action_mask, b.action_mask);
    }
    if (t >= 18) EXPECT_EQ(samples[t].reward, 0.0);  // padded pages
  }
  EXPECT_EQ(terminals, 1);
  EXPECT_EQ(samples.back().terminal, 1);
}

TEST(MdpSamples, PageSumMatchesPageRewardAtRealizedFeedback) {
  Catalog cat = make_catalog(30);
  Feedback fb = {1, 1, 1, 1, 0, 1, 0, 0, 0};
  auto sessions = sessionize_and_pad({make_row("a", 1, fb, 4)}, 1, cat, 0);
  EpisodeConfig cfg = EpisodeConfig::slate();
  auto samples = to_mdp_samples(sessions[0], cfg, cat);
  double sum = 0, g = 1;
  for (const auto& s : samples) {
    sum += g * s.reward;
    g *= cfg.gamma;
  }
  std::vector<ItemId> items(9);
  std::iota(items.begin(), items.end(), 4);
  EXPECT_NEAR(sum, realized_page_reward(cat, items, fb, cfg.gamma), 1e-12);
}

TEST(MdpSamples, PaddingLeavesRealPagesAlone) {
  Catalog cat = make_catalog(30);
  std::vector<LoggedRow> rows = {make_row("a", 1, {1, 1, 1, 0, 0, 0, 0, 0, 0}),
                                 make_row("a", 2, {1, 0, 0, 0, 0, 0, 0, 0, 0}, 7)};
  EpisodeConfig cfg = seq_cfg();
  auto unpadded = to_mdp_samples(sessionize_and_pad(rows, 2, cat, 0)[0], cfg, cat);
  auto padded_a = to_mdp_samples(sessionize_and_pad(rows, 4, cat, 1)[0], cfg, cat);
  auto padded_b = to_mdp_samples(sessionize_and_pad(rows, 4, cat, 2)[0], cfg, cat);
  ASSERT_EQ(unpadded.size(), 18u);
  for (std::size_t t = 0; t < 18; ++t) {
    EXPECT_EQ(padded_a[t].state, unpadded[t].state);
    EXPECT_EQ(padded_a[t].action, unpadded[t].action);
    EXPECT_EQ(padded_a[t].reward, unpadded[t].reward);
    EXPECT_EQ(padded_a[t].action_probability, unpadded[t].action_probability);
    EXPECT_EQ(padded_a[t].action_mask, unpadded[t].action_mask);
    EXPECT_EQ(padded_a[t].observation, unpadded[t].observation);
    if (t + 1 < 18) {
      EXPECT_EQ(padded_a[t], unpadded[t]);
      EXPECT_EQ(padded_a[t], padded_b[t]);
    }
  }
}

TEST(MdpSamples, UnknownItemIsACatalogError) {
  Catalog cat = make_catalog(30);
  SessionRecord s = sessionize_and_pad({make_row("a", 1, Feedback(9, 0))}, 1, cat, 0)[0];
  Catalog small = make_catalog(5);
  EXPECT_THROW(to_mdp_samples(s, EpisodeConfig::slate(), small), CatalogError);
}

TEST(MdpSamples, JsonLinesRoundTrip) {
  Catalog cat = make_catalog(30);
  auto s = sessionize_and_pad({make_row("a", 1, {1, 1, 1, 0, 1, 0, 0, 0, 0})}, 4, cat, 0)[0];
  auto samples = to_mdp_samples(s, seq_cfg(), cat);
  std::istringstream in(samples_to_string(samples));
  EXPECT_EQ(read_samples(in), samples);
}

TEST(MdpSamples, StateEncodingIsLossless) {
  Catalog cat = make_catalog(30);
  std::vector<LoggedRow> rows = {make_row("a", 1, {1, 1, 1, 0, 1, 0, 0, 0, 0}),
                                 make_row("a", 2, {1, 0, 0, 0, 0, 0, 0, 0, 0}, 9)};
  EpisodeConfig cfg = seq_cfg();
  auto samples = to_mdp_samples(sessionize_and_pad(rows, 4, cat, 0)[0], cfg, cat);
  SlateState s = decode_state(samples[13].state, cfg);
  EXPECT_EQ(s.page_index, 1u);
  EXPECT_EQ(s.step_index, 13u);
  EXPECT_EQ(s.chosen_items, (std::vector<ItemId>{9, 10, 11, 12}));
  ASSERT_EQ(s.history.size(), 1u);
  EXPECT_EQ(s.history[0].feedback, rows[0].user_feedback);
  EXPECT_EQ(encode_state(s, cfg), samples[13].state);
}

std::vector<LoggedRow> mixed_rows() {
  std::vector<LoggedRow> rows;
  for (int u = 0; u < 40; ++u) {
    for (int k = 1; k <= 2; ++k) {
      LoggedRow r = make_row("s" + std::to_string(u), k, Feedback(9, 0));
      r.user_portrait = {static_cast<double>(u % 10), 1.0};
      r.timestamp = 100 * u + k;
      r.behavior_policy_id = u < 25 ? "sl:softmax" : "rl:pg";
      rows.push_back(r);
    }
  }
  return rows;
}

std::set<std::string> ids_of(const std::vector<LoggedRow>& rows) {
  std::set<std::string> out;
  for (const auto& r : rows) out.insert(r.session_id);
  return out;
}

TEST(Split, EraSplitKeepsSlForTraining) {
  auto split = split_dataset(mixed_rows(), SplitMode::sl_rl, {});
  for (const auto& r : split.train) EXPECT_EQ(policy_era(r.behavior_policy_id), "sl");
  for (const auto& r : split.test) EXPECT_EQ(policy_era(r.behavior_policy_id), "rl");
  EXPECT_EQ(ids_of(split.train).size(), 25u);
  auto rows = mixed_rows();
  rows[3].behavior_policy_id = "legacy";
  EXPECT_THROW(split_dataset(rows, SplitMode::sl_rl, {}), ConfigError);
}

TEST(Split, ByUserIsDeterministicAndDisjoint) {
  SplitParams p;
  p.test_fraction = 0.3;
  p.seed = 17;
  auto a = split_dataset(mixed_rows(), SplitMode::by_user, p);
  auto b = split_dataset(mixed_rows(), SplitMode::by_user, p);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  auto tr = ids_of(a.train), te = ids_of(a.test);
  for (const auto& id : tr) EXPECT_EQ(te.count(id), 0u);
  EXPECT_EQ(a.train.size() + a.test.size(), mixed_rows().size());
  // users with equal features land on the same side
  std::map<double, std::set<bool>> side;
  for (const auto& r : a.train) side[r.user_portrait[0]].insert(false);
  for (const auto& r : a.test) side[r.user_portrait[0]].insert(true);
  for (const auto& [u, sides] : side) EXPECT_EQ(sides.size(), 1u);
}

TEST(Split, ByTimeRejectsDegenerateCutoffs) {
  SplitParams p;
  p.cutoff = 2000;
  auto s = split_dataset(mixed_rows(), SplitMode::by_time, p);
  EXPECT_EQ(ids_of(s.train).size(), 20u);
  p.cutoff = -5;
  EXPECT_THROW(split_dataset(mixed_rows(), SplitMode::by_time, p), EmptyDataError);
  EXPECT_THROW(split_dataset(mixed_rows(), SplitMode::by_time, {}), ConfigError);
}

}  // namespace
}  // namespace slaterl
