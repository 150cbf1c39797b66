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
#include <map>
#include <random>

#include "oracles.hpp"
#include "slaterl/core/stats.hpp"
#include "slaterl/logged_data/feedback.hpp"
#include "slaterl/user_model/features.hpp"
#include "slaterl/user_model/metrics.hpp"
#include "slaterl/user_model/model.hpp"

namespace slaterl {
namespace {

Catalog small_catalog(std::size_t n) {
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    items.push_back({static_cast<ItemId>(100 + i), 2.0 + x, {std::sin(x), std::cos(x)}});
  }
  return Catalog(items);
}

// Replays a table of logged feedback: q_i is the logged bit, so the class
// distribution puts all its mass on the logged pattern.
class FeedbackOracle : public ResponseModel {
 public:
  explicit FeedbackOracle(const std::vector<PageRecord>& pages) {
    for (const auto& p : pages) table_[p.items] = p.feedback;
  }
  std::size_t user_dim() const override { return 1; }
  std::vector<double> conditional_probs(const SlateState&,
                                        std::span<const ItemId> slate) const override {
    const auto& fb = table_.at(std::vector<ItemId>(slate.begin(), slate.end()));
    return std::vector<double>(fb.begin(), fb.end());
  }
  double continue_prob(const SlateState&) const override { return 0.0; }

 private:
  std::map<std::vector<ItemId>, Feedback> table_;
};

std::vector<PageRecord> random_pages(const Catalog& cat, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto& patterns = valid_patterns(UnlockLayout{});
  std::vector<PageRecord> out;
  auto ids = cat.ids();
  for (std::size_t k = 0; k < n; ++k) {
    std::shuffle(ids.begin(), ids.end(), rng);
    PageRecord r;
    r.user_context = {uniform(rng, -1, 1)};
    r.items.assign(ids.begin(), ids.begin() + 9);
    r.feedback = patterns[uniform_index(rng, patterns.size())];
    out.push_back(r);
  }
  return out;
}

TEST(Featurize, DeterministicAndPositional) {
  Catalog cat = small_catalog(12);
  FeatureSpec spec = FeatureSpec::for_catalog(cat, 2, EpisodeConfig::slate());
  std::vector<double> ctx = {0.3, -0.7};
  std::vector<ItemId> slate = {100, 101, 102, 103};
  auto a = featurize(spec, cat, ctx, slate, 105, 4);
  auto b = featurize(spec, cat, ctx, slate, 105, 4);
  EXPECT_EQ(a, b);
  FeatureLayout layout(spec);
  EXPECT_EQ(a.size(), layout.size);

  auto p0 = featurize(spec, cat, ctx, {}, 105, 0);
  auto p8 = featurize(spec, cat, ctx, {}, 105, 8);
  for (std::size_t d = 0; d < p0.size(); ++d) {
    const bool in_position = d >= layout.position && d < layout.position + spec.page_size;
    if (in_position) continue;
    EXPECT_EQ(p0[d], p8[d]) << d;
  }
  EXPECT_EQ(p0[layout.position], 1.0);
  EXPECT_EQ(p8[layout.position + 8], 1.0);
  EXPECT_THROW(featurize(spec, cat, ctx, {}, 105, 9), ContractError);
  EXPECT_THROW(featurize(spec, cat, ctx, {}, 7, 0), CatalogError);
}

TEST(Featurize, UtilityOnlyChangesItemSlots) {
  // the same candidate id in two catalogs that differ only in its utility
  std::vector<Item> items = {{1, 4.0, {0.5}}, {2, 6.0, {0.1}}, {3, 10.0, {0.2}}};
  Catalog c1(items);
  items[0].utility = 5.0;
  Catalog c2(items);
  FeatureSpec spec = FeatureSpec::for_catalog(c1, 1, EpisodeConfig::slate());
  spec.page_size = 3;
  FeatureLayout layout(spec);
  std::vector<double> ctx = {1.0};
  std::vector<ItemId> slate = {3, 2, 1};
  auto a = featurize(spec, c1, ctx, slate, 1, 2);
  auto b = featurize(spec, c2, ctx, slate, 1, 2);
  for (std::size_t d = 0; d < a.size(); ++d) {
    if (d == layout.utility) {
      EXPECT_NE(a[d], b[d]);
    } else {
      EXPECT_EQ(a[d], b[d]) << d;
    }
  }
}

TEST(Featurize, CodisplayAggregates) {
  std::vector<Item> items = {{1, 2.0, {0.0}}, {2, 4.0, {0.0}}, {3, 10.0, {0.0}}};
  Catalog cat(items);
  FeatureSpec spec = FeatureSpec::for_catalog(cat, 1, EpisodeConfig::slate());
  spec.page_size = 3;
  FeatureLayout layout(spec);
  std::vector<double> ctx = {0.0};
  std::vector<ItemId> slate = {1, 2, 3};
  auto x = featurize(spec, cat, ctx, slate, 3, 2);
  EXPECT_DOUBLE_EQ(x[layout.codisplay], 0.3);
  EXPECT_DOUBLE_EQ(x[layout.codisplay + 1], 0.4);
  EXPECT_DOUBLE_EQ(x[layout.codisplay + 2], 2.0 / 3.0);
}

void check_gradient(std::size_t hidden, std::uint64_t seed) {
  Rng rng(seed);
  Examples ex;
  ex.dim = 5;
  for (int i = 0; i < 20; ++i) {
    for (std::size_t d = 0; d < ex.dim; ++d) ex.x.push_back(normal(rng));
    ex.y.push_back(bernoulli(rng, 0.4) ? 1.0 : 0.0);
  }
  const std::size_t n = hidden == 0 ? ex.dim + 1 : hidden * ex.dim + 2 * hidden + 1;
  std::vector<double> p(n);
  for (double& v : p) v = 0.5 * normal(rng);
  std::vector<double> g;
  purchase_loss(p, ex, hidden, 0.01, &g);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-5;
    auto plus = p, minus = p;
    plus[j] += h;
    minus[j] -= h;
    const double fd = (purchase_loss(plus, ex, hidden, 0.01, nullptr) -
                       purchase_loss(minus, ex, hidden, 0.01, nullptr)) /
                      (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(g[j]), 1e-8});
    EXPECT_LT(std::abs(fd - g[j]) / denom, 1e-4) << "param " << j << " hidden " << hidden;
  }
}

TEST(UserModelFit, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    check_gradient(0, seed);
    check_gradient(3, seed);
  }
}

// One row of three, so every position is unlocked and every label counts.
EpisodeConfig one_row() {
  EpisodeConfig cfg;
  cfg.page_size = 3;
  cfg.row_width = 3;
  return cfg;
}

TEST(UserModelFit, SeparableToyIsFitPerfectly) {
  std::vector<Item> items;
  for (int i = 0; i < 10; ++i) items.push_back({i, 5.0, {i % 2 ? 1.0 : -1.0}});
  Catalog cat(items);
  Rng rng(3);
  std::vector<PageRecord> pages;
  auto ids = cat.ids();
  for (int k = 0; k < 80; ++k) {
    std::shuffle(ids.begin(), ids.end(), rng);
    PageRecord r;
    r.user_context = {uniform01(rng)};
    r.items.assign(ids.begin(), ids.begin() + 3);
    for (ItemId id : r.items) r.feedback.push_back(id % 2 ? 1 : 0);
    pages.push_back(r);
  }
  UserModelConfig cfg;
  cfg.epochs = 300;
  cfg.item_onehot = false;
  auto [model, report] = fit_user_model(pages, cat, one_row(), cfg);
  EXPECT_EQ(report.item_examples, 240u);
  for (std::size_t e = 1; e < report.loss_curve.size(); ++e) {
    EXPECT_LE(report.loss_curve[e], report.loss_curve[e - 1]);
  }
  auto m = evaluate_user_model(model, cat, one_row(), pages);
  EXPECT_EQ(m.item_accuracy, 1.0);
  EXPECT_EQ(m.item_auc, 1.0);
  EXPECT_EQ(m.slate_accuracy, 1.0);
}

TEST(UserModelFit, ZeroEpochsKeepsInitialParameters) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 30, 5);
  UserModelConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = 4;
  cfg.seed = 11;
  auto [model, report] = fit_user_model(pages, cat, EpisodeConfig::slate(), cfg);
  UserModel fresh(cat, model.spec(), 4);
  fresh.init_params(11);
  EXPECT_EQ(model.params(), fresh.params());
  EXPECT_EQ(report.epochs_run, 0u);
}

TEST(UserModelFit, DeterministicUnderSeed) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 30, 6);
  UserModelConfig cfg;
  cfg.epochs = 20;
  cfg.hidden = 3;
  cfg.seed = 2;
  auto a = fit_user_model(pages, cat, EpisodeConfig::slate(), cfg).first;
  auto b = fit_user_model(pages, cat, EpisodeConfig::slate(), cfg).first;
  EXPECT_TRUE(a == b);
}

TEST(UserModelFit, ErrorsOnBadInput) {
  Catalog cat = small_catalog(12);
  UserModelConfig cfg;
  EXPECT_THROW(fit_user_model({}, cat, EpisodeConfig::slate(), cfg), EmptyDataError);
  auto pages = random_pages(cat, 5, 1);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(fit_user_model(pages, cat, EpisodeConfig::slate(), cfg), ConfigError);
}

TEST(UserModelFit, NanLossIsDivergence) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 5, 1);
  pages[0].user_context[0] = std::nan("");
  UserModelConfig cfg;
  cfg.epochs = 5;
  try {
    fit_user_model(pages, cat, EpisodeConfig::slate(), cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 0u);
  }
}

TEST(Predict, ClassDistributionShape) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 40, 7);
  UserModelConfig cfg;
  cfg.epochs = 30;
  auto model = fit_user_model(pages, cat, EpisodeConfig::slate(), cfg).first;
  const UnlockLayout layout;
  auto pred = model.predict(pages[0].state(), pages[0].items, layout);
  ASSERT_EQ(pred.class_probs.size(), 22u);
  double total = 0.0;
  for (double p : pred.class_probs) {
    EXPECT_GT(p, 0.0);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (double q : pred.conditional) {
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, 1.0);
  }
  // marginals reproduced from the class distribution itself
  const auto& patterns = valid_patterns(layout);
  for (std::size_t i = 0; i < 9; ++i) {
    double m = 0.0;
    for (std::size_t c = 0; c < patterns.size(); ++c) m += pred.class_probs[c] * patterns[c][i];
    EXPECT_NEAR(m, pred.marginals[i], 1e-12);
  }
  std::vector<ItemId> short_slate(pages[0].items.begin(), pages[0].items.begin() + 8);
  EXPECT_THROW(model.conditional_probs(pages[0].state(), short_slate), ContractError);
}

TEST(Predict, DegenerateProbabilities) {
  const UnlockLayout layout;
  const auto& patterns = valid_patterns(layout);
  auto ones = class_distribution(std::vector<double>(9, 1.0), layout);
  auto zeros = class_distribution(std::vector<double>(9, 0.0), layout);
  for (std::size_t c = 0; c < patterns.size(); ++c) {
    const bool all = std::all_of(patterns[c].begin(), patterns[c].end(), [](auto b) { return b; });
    const bool none = std::none_of(patterns[c].begin(), patterns[c].end(), [](auto b) { return b; });
    EXPECT_EQ(ones[c], all ? 1.0 : 0.0);
    EXPECT_EQ(zeros[c], none ? 1.0 : 0.0);
  }
}

TEST(Metrics, AucMatchesPairwiseOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 99;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 10) / 10.0;
      y[i] = rng() % 2;
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_EQ(stats::auc(s, y), oracle::pairwise_auc(s, y));
  }
  std::vector<double> s = {0.9, 0.1};
  std::vector<std::uint8_t> y = {1, 0};
  EXPECT_EQ(stats::auc(s, y), 1.0);
}

TEST(Metrics, FeedbackOracleHasZeroRewardError) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 60, 8);
  FeedbackOracle oracle_model(pages);
  auto m = evaluate_user_model(oracle_model, cat, EpisodeConfig::slate(), pages);
  EXPECT_EQ(m.reward_error_mean, 0.0);
  EXPECT_EQ(m.reward_error_abs, 0.0);
  EXPECT_EQ(m.reward_error_std, 0.0);
  EXPECT_EQ(m.slate_accuracy, 1.0);
  EXPECT_EQ(m.item_accuracy, 1.0);
  EXPECT_EQ(m.rank_f1, 1.0);
}

TEST(Metrics, InvariantToShuffling) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 50, 9);
  UserModelConfig cfg;
  cfg.epochs = 20;
  auto model = fit_user_model(pages, cat, EpisodeConfig::slate(), cfg).first;
  auto a = evaluate_user_model(model, cat, EpisodeConfig::slate(), pages);
  std::shuffle(pages.begin(), pages.end(), std::mt19937_64(4));
  auto b = evaluate_user_model(model, cat, EpisodeConfig::slate(), pages);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  for (double v : {a.slate_accuracy, a.item_auc, a.item_accuracy, a.rank_auc, a.rank_precision,
                   a.rank_recall, a.rank_f1}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Metrics, SingleClassLabelsAreUndefined) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 4, 10);
  for (auto& p : pages) p.feedback.assign(9, 0);
  FeedbackOracle oracle_model(pages);
  EXPECT_THROW(evaluate_user_model(oracle_model, cat, EpisodeConfig::slate(), pages),
               UndefinedError);
  EXPECT_THROW(evaluate_user_model(oracle_model, cat, EpisodeConfig::slate(), {}), EmptyDataError);
}

TEST(Metrics, TableLayout) {
  UserModelMetrics m;
  m.reward_error_mean = 0.94;
  m.reward_error_abs = 41.6;
  m.reward_error_std = 66.3;
  EXPECT_NE(metrics_table("glm", m).find("glm\t0.9 / 41.6 / 66.3"), std::string::npos);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 30, 12);
  UserModelConfig cfg;
  cfg.epochs = 15;
  cfg.hidden = 3;
  auto model = fit_user_model(pages, cat, EpisodeConfig::slate(), cfg).first;
  model.trained_on = "by-user:0.1";
  const std::string text = model.save();
  UserModel back = UserModel::load(text, cat);
  EXPECT_TRUE(back == model);
  EXPECT_EQ(back.save(), text);
  EXPECT_THROW(UserModel::load(text, small_catalog(11)), CatalogError);
  EXPECT_THROW(UserModel::load("{\"format\": \"other\"}", cat), SchemaError);
  EXPECT_THROW(UserModel::load("{nope", cat), ParseError);
}

TEST(ContinueHead, LearnsFromHasNext) {
  Catalog cat = small_catalog(12);
  auto pages = random_pages(cat, 80, 13);
  // sessions continue exactly when at least two items were bought
  for (auto& p : pages) p.has_next = std::count(p.feedback.begin(), p.feedback.end(), 1) >= 2;
  UserModelConfig cfg;
  cfg.epochs = 200;
  auto model = fit_user_model(pages, cat, EpisodeConfig::seqslate(), cfg).first;
  for (const auto& p : pages) {
    SlateState after = p.state();
    after.history.push_back({p.items, p.feedback});
    const double c = model.continue_prob(after);
    if (p.has_next) {
      EXPECT_GT(c, 0.5);
    } else {
      EXPECT_LT(c, 0.5);
    }
  }
}

}  // namespace
}  // namespace slaterl
