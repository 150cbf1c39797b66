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
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/stats.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/slate_env/episode.hpp"
#include "slaterl/slate_env/response_model.hpp"
#include "slaterl/user_model/model.hpp"

namespace slaterl {

/// Supervised metrics of a response model on held-out pages.
///
/// slate: the argmax class must equal the logged pattern.
/// item: pooled binary classification of every position, scored by the
///       marginal purchase probability (threshold 0.5 for accuracy).
/// rank: the nine positions of a page as labels to rank; AUC is averaged over
///       pages that have both outcomes, precision/recall/F1 pool all labels.
/// reward error: predicted expected page reward minus the realized one.
struct UserModelMetrics {
  std::size_t pages = 0;
  double slate_accuracy = 0.0;
  double item_auc = 0.0;
  double item_accuracy = 0.0;
  double rank_auc = 0.0;
  double rank_precision = 0.0;
  double rank_recall = 0.0;
  double rank_f1 = 0.0;
  double reward_error_mean = 0.0;
  double reward_error_abs = 0.0;
  double reward_error_std = 0.0;
};

namespace detail {

// Sorted summation so the result does not depend on page order.
inline double sorted_mean(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

}  // namespace detail

inline UserModelMetrics evaluate_user_model(const ResponseModel& model, const Catalog& catalog,
                                            const EpisodeConfig& cfg,
                                            const std::vector<PageRecord>& test) {
  if (test.empty()) throw EmptyDataError("no test pages");
  const UnlockLayout layout = cfg.layout();
  UserModelMetrics m;
  m.pages = test.size();
  std::size_t slate_hits = 0, item_hits = 0, tp = 0, fp = 0, fn = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<double> page_aucs, errors;
  for (const PageRecord& r : test) {
    const SlatePrediction pred = model.predict(r.state(), r.items, layout);
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(pred.class_probs.begin(), pred.class_probs.end()) -
                                 pred.class_probs.begin());
    slate_hits += valid_patterns(layout)[best] == r.feedback;
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < r.items.size(); ++i) {
      const bool y = r.feedback[i] != 0;
      const bool yhat = pred.marginals[i] >= 0.5;
      scores.push_back(pred.marginals[i]);
      labels.push_back(y);
      item_hits += y == yhat;
      tp += y && yhat;
      fp += !y && yhat;
      fn += y && !yhat;
      pos = pos || y;
      neg = neg || !y;
    }
    if (pos && neg) {
      std::vector<std::uint8_t> l(r.feedback.begin(), r.feedback.end());
      page_aucs.push_back(stats::auc(pred.marginals, l));
    }
    const auto utils = page_utilities(catalog, r.items);
    const double predicted = page_reward(pred.marginals, utils, cfg.gamma);
    std::vector<double> realized(r.feedback.begin(), r.feedback.end());
    errors.push_back(predicted - page_reward(realized, utils, cfg.gamma));
  }
  const double n_items = static_cast<double>(labels.size());
  m.slate_accuracy = static_cast<double>(slate_hits) / static_cast<double>(test.size());
  m.item_auc = stats::auc(scores, labels);
  m.item_accuracy = static_cast<double>(item_hits) / n_items;
  if (page_aucs.empty()) throw UndefinedError("no test page has both bought and unbought items");
  m.rank_auc = detail::sorted_mean(page_aucs);
  m.rank_precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.rank_recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.rank_f1 = m.rank_precision + m.rank_recall > 0
                  ? 2 * m.rank_precision * m.rank_recall / (m.rank_precision + m.rank_recall)
                  : 0.0;
  std::sort(errors.begin(), errors.end());
  m.reward_error_mean = detail::sorted_mean(errors);
  std::vector<double> abs_errors, sq;
  for (double e : errors) {
    abs_errors.push_back(std::abs(e));
    sq.push_back((e - m.reward_error_mean) * (e - m.reward_error_mean));
  }
  m.reward_error_abs = detail::sorted_mean(abs_errors);
  m.reward_error_std = std::sqrt(detail::sorted_mean(sq));
  return m;
}

inline nlohmann::json to_json(const UserModelMetrics& m) {
  return nlohmann::json{{"pages", m.pages},
                        {"slate_accuracy", m.slate_accuracy},
                        {"item_auc", m.item_auc},
                        {"item_accuracy", m.item_accuracy},
                        {"rank_auc", m.rank_auc},
                        {"rank_precision", m.rank_precision},
                        {"rank_recall", m.rank_recall},
                        {"rank_f1", m.rank_f1},
                        {"reward_error_mean", m.reward_error_mean},
                        {"reward_error_abs", m.reward_error_abs},
                        {"reward_error_std", m.reward_error_std}};
}

/// Two tab separated tables: task metrics and the reward error triple.
inline std::string metrics_table(const std::string& name, const UserModelMetrics& m) {
  std::ostringstream out;
  out << "model\tslate_acc\titem_auc\titem_acc\trank_auc\trank_prec\trank_recall\trank_f1\n";
  out << name << '\t' << text::fixed(m.slate_accuracy, 3) << '\t' << text::fixed(m.item_auc, 3)
      << '\t' << text::fixed(m.item_accuracy, 3) << '\t' << text::fixed(m.rank_auc, 3) << '\t'
      << text::fixed(m.rank_precision, 3) << '\t' << text::fixed(m.rank_recall, 3) << '\t'
      << text::fixed(m.rank_f1, 3) << "\n\n";
  out << "model\treward_error (mean / abs / std)\n";
  out << name << '\t' << text::fixed(m.reward_error_mean, 1) << " / "
      << text::fixed(m.reward_error_abs, 1) << " / " << text::fixed(m.reward_error_std, 1) << '\n';
  return out.str();
}

}  // namespace slaterl
