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

// Featurization shared by the user model and the learned policies.
//
// A feature vector describes one candidate item at one position of a page:
//
//   user context | item features | scaled utility | item one-hot |
//   position one-hot | page one-hot | co-displayed aggregates (3) |
//   context x item-feature interaction | history block
//
// The co-displayed items are the other entries of the slate passed in (for a
// complete page, every other position; while a page is being built, the items
// chosen so far). Their mean and max scaled utility make slate effects such as
// decoys representable. The history block multiplies the candidate's features
// with the elementwise max of the features of items bought (and, separately,
// shown) on earlier pages, plus two flags for the candidate itself.

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/slate_env/episode.hpp"

namespace slaterl {

struct FeatureSpec {
  std::size_t user_dim = 0;
  std::size_t item_dim = 0;
  std::size_t catalog_size = 0;
  std::size_t page_size = 9;
  std::size_t max_pages = 1;
  bool item_onehot = true;
  bool interaction = true;
  bool history = true;

  static FeatureSpec for_catalog(const Catalog& catalog, std::size_t user_dim,
                                 const EpisodeConfig& cfg) {
    FeatureSpec s;
    s.user_dim = user_dim;
    s.item_dim = catalog.feature_dim();
    s.catalog_size = catalog.size();
    s.page_size = cfg.page_size;
    s.max_pages = cfg.max_pages;
    return s;
  }

  bool operator==(const FeatureSpec&) const = default;
};

inline void to_json(nlohmann::json& j, const FeatureSpec& s) {
  j = nlohmann::json{{"user_dim", s.user_dim},       {"item_dim", s.item_dim},
                     {"catalog_size", s.catalog_size}, {"page_size", s.page_size},
                     {"max_pages", s.max_pages},     {"item_onehot", s.item_onehot},
                     {"interaction", s.interaction}, {"history", s.history}};
}

inline void from_json(const nlohmann::json& j, FeatureSpec& s) {
  j.at("user_dim").get_to(s.user_dim);
  j.at("item_dim").get_to(s.item_dim);
  j.at("catalog_size").get_to(s.catalog_size);
  j.at("page_size").get_to(s.page_size);
  j.at("max_pages").get_to(s.max_pages);
  j.at("item_onehot").get_to(s.item_onehot);
  j.at("interaction").get_to(s.interaction);
  j.at("history").get_to(s.history);
}

/// Offsets of each block inside a feature vector.
struct FeatureLayout {
  std::size_t user = 0, item = 0, utility = 0, onehot = 0, position = 0, page = 0, codisplay = 0,
              interaction = 0, history = 0, size = 0;

  explicit FeatureLayout(const FeatureSpec& s) {
    std::size_t k = 0;
    user = k;
    k += s.user_dim;
    item = k;
    k += s.item_dim;
    utility = k;
    k += 1;
    onehot = k;
    k += s.item_onehot ? s.catalog_size : 0;
    position = k;
    k += s.page_size;
    page = k;
    k += s.max_pages;
    codisplay = k;
    k += 3;
    interaction = k;
    k += s.interaction ? s.user_dim * s.item_dim : 0;
    history = k;
    k += s.history ? 2 * s.item_dim + 2 : 0;
    size = k;
  }
};

/// Summary of earlier pages that featurize needs; compute it once per state.
struct HistorySummary {
  std::vector<double> bought_max;  // elementwise max(0, features) over bought items
  std::vector<double> shown_max;
  std::vector<ItemId> bought;
  std::vector<ItemId> shown;
};

inline HistorySummary summarize_history(const Catalog& catalog,
                                        std::span<const CompletedPage> history) {
  HistorySummary h;
  h.bought_max.assign(catalog.feature_dim(), 0.0);
  h.shown_max.assign(catalog.feature_dim(), 0.0);
  for (const CompletedPage& page : history) {
    for (std::size_t i = 0; i < page.items.size(); ++i) {
      const auto& f = catalog.at(page.items[i]).features;
      for (std::size_t d = 0; d < f.size(); ++d) h.shown_max[d] = std::max(h.shown_max[d], f[d]);
      h.shown.push_back(page.items[i]);
      if (i < page.feedback.size() && page.feedback[i]) {
        for (std::size_t d = 0; d < f.size(); ++d) {
          h.bought_max[d] = std::max(h.bought_max[d], f[d]);
        }
        h.bought.push_back(page.items[i]);
      }
    }
  }
  return h;
}

/// Writes the feature vector into out (resized to the layout size).
inline void featurize_into(const FeatureSpec& spec, const FeatureLayout& layout,
                           const Catalog& catalog, std::span<const double> user_context,
                           std::span<const ItemId> slate, ItemId candidate, std::size_t position,
                           std::size_t page_index, const HistorySummary& hist,
                           std::vector<double>& out) {
  if (user_context.size() != spec.user_dim) {
    throw ContractError("featurize: user context has dimension " +
                        std::to_string(user_context.size()));
  }
  if (position >= spec.page_size) throw ContractError("featurize: position out of range");
  out.assign(layout.size, 0.0);
  std::copy(user_context.begin(), user_context.end(), out.begin() + layout.user);
  const double scale = catalog.utility_scale();
  const std::size_t idx = catalog.index_of(candidate);
  const Item& item = catalog.items()[idx];
  std::copy(item.features.begin(), item.features.end(), out.begin() + layout.item);
  out[layout.utility] = item.utility / scale;
  if (spec.item_onehot) {
    if (idx >= spec.catalog_size) throw CatalogError("item outside the featurized catalog");
    out[layout.onehot + idx] = 1.0;
  }
  out[layout.position + position] = 1.0;
  out[layout.page + std::min(page_index, spec.max_pages - 1)] = 1.0;

  double sum = 0.0, mx = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < slate.size(); ++k) {
    if (k == position) continue;
    const double u = catalog.utility(slate[k]) / scale;
    sum += u;
    mx = count == 0 ? u : std::max(mx, u);
    ++count;
  }
  out[layout.codisplay] = count ? sum / static_cast<double>(count) : 0.0;
  out[layout.codisplay + 1] = mx;
  out[layout.codisplay + 2] = static_cast<double>(count) / static_cast<double>(spec.page_size);

  if (spec.interaction) {
    std::size_t k = layout.interaction;
    for (std::size_t u = 0; u < spec.user_dim; ++u) {
      for (std::size_t d = 0; d < spec.item_dim; ++d) out[k++] = user_context[u] * item.features[d];
    }
  }
  if (spec.history) {
    std::size_t k = layout.history;
    for (std::size_t d = 0; d < spec.item_dim; ++d) out[k++] = hist.bought_max[d] * item.features[d];
    for (std::size_t d = 0; d < spec.item_dim; ++d) out[k++] = hist.shown_max[d] * item.features[d];
    out[k++] = std::count(hist.bought.begin(), hist.bought.end(), candidate) > 0 ? 1.0 : 0.0;
    out[k++] = std::count(hist.shown.begin(), hist.shown.end(), candidate) > 0 ? 1.0 : 0.0;
  }
}

inline std::vector<double> featurize(const FeatureSpec& spec, const Catalog& catalog,
                                     std::span<const double> user_context,
                                     std::span<const ItemId> slate, ItemId candidate,
                                     std::size_t position, std::size_t page_index = 0,
                                     std::span<const CompletedPage> history = {}) {
  std::vector<double> out;
  featurize_into(spec, FeatureLayout(spec), catalog, user_context, slate, candidate, position,
                 page_index, summarize_history(catalog, history), out);
  return out;
}

}  // namespace slaterl
