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

// Ground-truth synthetic worlds.
//
// A user is a context vector (portrait ++ click history); only the portrait
// part drives purchases. Once its row is unlocked, item i at position k of a
// page with co-displayed items C is bought with probability
//
//   sigmoid(bias_i + portrait . A . f_i
//           + decoy * (mean_{j in C} r_j - r_i) / max r
//           - position_decay * k / page_size
//           + long-term term)
//
// The long-term term only exists for sequels. A sequel has a prerequisite
// (its teaser); if the teaser was bought on an earlier page the term is
// lt_coef, if it was only shown it is exposure_weight * lt_coef. Teasers and
// sequels of one series share a tag dimension in the item features.
//
// After a page the session continues with probability
// sigmoid(continue_bias + continue_slope * fraction bought).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/slate_env/response_model.hpp"
#include "slaterl/user_model/model.hpp"

namespace slaterl::synth {

struct WorldParams {
  std::uint64_t seed = 0;
  std::size_t n_items = 24;
  std::size_t n_users = 64;
  std::size_t portrait_dim = 4;
  std::size_t click_dim = 2;
  std::size_t item_dim = 3;  // taste dimensions; series tags are appended
  std::size_t n_series = 0;
  std::size_t page_size = 9;
  std::size_t row_width = 3;
  double utility_lo = 2.0;
  double utility_hi = 12.0;
  double bias_mean = -0.5;
  double bias_spread = 0.8;
  double affinity_scale = 0.6;
  double decoy = 0.0;
  double position_decay = 0.0;
  double lt_coef = 0.0;
  double exposure_weight = 0.3;
  double teaser_utility = 2.0;
  double teaser_bias = 0.0;
  double sequel_utility = 30.0;
  double sequel_bias = -4.0;
  double continue_bias = 1.5;
  double continue_slope = 1.0;

  void validate() const {
    if (n_items == 0 || n_users == 0) throw ConfigError("world needs items and users");
    if (page_size > n_items) {
      throw ConfigError("page size " + std::to_string(page_size) + " exceeds the catalog of " +
                        std::to_string(n_items));
    }
    if (2 * n_series > n_items) throw ConfigError("more series than the catalog can hold");
    for (double x : {utility_lo, utility_hi, bias_mean, bias_spread, affinity_scale, decoy,
                     position_decay, lt_coef, exposure_weight, teaser_utility, teaser_bias,
                     sequel_utility, sequel_bias, continue_bias, continue_slope}) {
      if (!std::isfinite(x)) throw ConfigError("world effect parameters must be finite");
    }
  }
};

struct WorldSpec {
  std::uint64_t seed = 0;
  std::size_t page_size = 9;
  std::size_t row_width = 3;
  std::size_t portrait_dim = 0;
  std::size_t click_dim = 0;
  std::size_t taste_dim = 0;  // leading item-feature dims the affinity acts on
  double decoy = 0.0;
  double position_decay = 0.0;
  double lt_coef = 0.0;
  double exposure_weight = 0.0;
  double continue_bias = 0.0;
  double continue_slope = 0.0;
  std::vector<double> affinity;  // portrait_dim x taste_dim, row major
  std::vector<std::vector<double>> users;
  Catalog catalog;
  std::vector<double> bias;      // aligned with catalog order
  std::vector<ItemId> prereq;    // kNoItem when the item has no teaser

  std::size_t context_dim() const { return portrait_dim + click_dim; }
  bool operator==(const WorldSpec&) const = default;
};

inline WorldSpec generate_world(const WorldParams& p) {
  p.validate();
  Rng rng = make_rng(p.seed, "world");
  WorldSpec w;
  w.seed = p.seed;
  w.page_size = p.page_size;
  w.row_width = p.row_width;
  w.portrait_dim = p.portrait_dim;
  w.click_dim = p.click_dim;
  w.taste_dim = p.item_dim;
  w.decoy = p.decoy;
  w.position_decay = p.position_decay;
  w.lt_coef = p.lt_coef;
  w.exposure_weight = p.exposure_weight;
  w.continue_bias = p.continue_bias;
  w.continue_slope = p.continue_slope;
  w.affinity.resize(p.portrait_dim * p.item_dim);
  for (double& a : w.affinity) a = p.affinity_scale * normal(rng);
  for (std::size_t u = 0; u < p.n_users; ++u) {
    std::vector<double> ctx(p.portrait_dim + p.click_dim);
    for (double& x : ctx) x = normal(rng);
    w.users.push_back(std::move(ctx));
  }
  // series s occupies items 2s (teaser) and 2s + 1 (sequel)
  std::vector<Item> items;
  for (std::size_t i = 0; i < p.n_items; ++i) {
    Item item;
    item.id = static_cast<ItemId>(i);
    item.features.assign(p.item_dim + p.n_series, 0.0);
    for (std::size_t d = 0; d < p.item_dim; ++d) item.features[d] = normal(rng);
    double bias = p.bias_mean + p.bias_spread * normal(rng);
    item.utility = uniform(rng, p.utility_lo, p.utility_hi);
    ItemId pre = kNoItem;
    if (i < 2 * p.n_series) {
      const std::size_t s = i / 2;
      item.features[p.item_dim + s] = 1.0;
      if (i % 2 == 0) {
        item.utility = p.teaser_utility;
        bias = p.teaser_bias;
      } else {
        item.utility = p.sequel_utility;
        bias = p.sequel_bias;
        pre = static_cast<ItemId>(i - 1);
      }
    }
    w.bias.push_back(bias);
    w.prereq.push_back(pre);
    items.push_back(std::move(item));
  }
  w.catalog = Catalog(std::move(items));
  return w;
}

/// The world as a response model over contexts of dimension context_dim().
class World : public ResponseModel {
 public:
  explicit World(WorldSpec spec) : spec_(std::move(spec)) {
    umax_ = 0.0;
    for (const Item& it : spec_.catalog.items()) umax_ = std::max(umax_, std::abs(it.utility));
    if (umax_ == 0.0) umax_ = 1.0;
  }

  const WorldSpec& spec() const { return spec_; }
  const Catalog& catalog() const { return spec_.catalog; }
  std::size_t user_dim() const override { return spec_.context_dim(); }

  /// Attraction without slate, position or history terms.
  double base_logit(std::span<const double> ctx, ItemId item) const {
    const std::size_t idx = spec_.catalog.index_of(item);
    const auto& f = spec_.catalog.items()[idx].features;
    double z = spec_.bias[idx];
    for (std::size_t u = 0; u < spec_.portrait_dim; ++u) {
      for (std::size_t d = 0; d < spec_.taste_dim; ++d) {
        z += ctx[u] * spec_.affinity[u * spec_.taste_dim + d] * f[d];
      }
    }
    return z;
  }

  /// Long-term shift of an item given the earlier pages.
  double history_shift(ItemId item, std::span<const CompletedPage> history) const {
    if (spec_.lt_coef == 0.0) return 0.0;
    const ItemId pre = spec_.prereq[spec_.catalog.index_of(item)];
    if (pre == kNoItem) return 0.0;
    bool shown = false;
    for (const auto& page : history) {
      for (std::size_t k = 0; k < page.items.size(); ++k) {
        if (page.items[k] != pre) continue;
        if (page.feedback[k]) return spec_.lt_coef;
        shown = true;
      }
    }
    return shown ? spec_.exposure_weight * spec_.lt_coef : 0.0;
  }

  /// Purchase probability of candidate at position, co-displayed with the
  /// slate entries other than that position.
  double item_prob(std::span<const double> ctx, std::span<const ItemId> slate, ItemId candidate,
                   std::size_t position, std::span<const CompletedPage> history) const {
    double z = base_logit(ctx, candidate) + history_shift(candidate, history);
    z -= spec_.position_decay * static_cast<double>(position) /
         static_cast<double>(spec_.page_size);
    if (spec_.decoy != 0.0) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t k = 0; k < slate.size(); ++k) {
        if (k == position) continue;
        sum += spec_.catalog.utility(slate[k]);
        ++n;
      }
      if (n) {
        const double mean = sum / static_cast<double>(n);
        z += spec_.decoy * (mean - spec_.catalog.utility(candidate)) / umax_;
      }
    }
    return sigmoid(z);
  }

  std::vector<double> conditional_probs(const SlateState& s,
                                        std::span<const ItemId> slate) const override {
    if (s.user_context.size() != user_dim()) throw ContractError("world: wrong context dimension");
    std::vector<double> out(slate.size());
    for (std::size_t i = 0; i < slate.size(); ++i) {
      out[i] = item_prob(s.user_context, slate, slate[i], i, s.history);
    }
    return out;
  }

  double continue_prob(const SlateState& after_page) const override {
    if (after_page.history.empty()) throw ContractError("continue_prob needs a completed page");
    const auto& fb = after_page.history.back().feedback;
    const double frac = static_cast<double>(std::count(fb.begin(), fb.end(), 1)) /
                        static_cast<double>(std::max<std::size_t>(fb.size(), 1));
    return sigmoid(spec_.continue_bias + spec_.continue_slope * frac);
  }

 private:
  WorldSpec spec_;
  double umax_ = 1.0;
};

// ---- text format ---------------------------------------------------------
//
//   slaterl-world 1
//   seed <n>
//   geometry <page_size> <row_width>
//   dims <portrait> <click> <taste>
//   effects <decoy> <position_decay> <lt_coef> <exposure_weight>
//   continue <bias> <slope>
//   affinity <portrait x taste numbers>
//   users <n>                      then n lines of context numbers
//   items <n>                      then n lines: id TAB utility TAB bias TAB prereq TAB features

inline void write_world(std::ostream& out, const WorldSpec& w) {
  auto nums = [](const std::vector<double>& xs) { return text::join_doubles(xs); };
  out << "slaterl-world 1\n";
  out << "seed " << w.seed << '\n';
  out << "geometry " << w.page_size << ' ' << w.row_width << '\n';
  out << "dims " << w.portrait_dim << ' ' << w.click_dim << ' ' << w.taste_dim << '\n';
  out << "effects " << text::format_double(w.decoy) << ' ' << text::format_double(w.position_decay)
      << ' ' << text::format_double(w.lt_coef) << ' ' << text::format_double(w.exposure_weight)
      << '\n';
  out << "continue " << text::format_double(w.continue_bias) << ' '
      << text::format_double(w.continue_slope) << '\n';
  out << "affinity " << nums(w.affinity) << '\n';
  out << "users " << w.users.size() << '\n';
  for (const auto& u : w.users) out << nums(u) << '\n';
  out << "items " << w.catalog.size() << '\n';
  for (std::size_t i = 0; i < w.catalog.size(); ++i) {
    const Item& it = w.catalog.items()[i];
    out << it.id << '\t' << text::format_double(it.utility) << '\t'
        << text::format_double(w.bias[i]) << '\t' << w.prereq[i] << '\t' << nums(it.features)
        << '\n';
  }
}

inline std::string world_to_string(const WorldSpec& w) {
  std::ostringstream out;
  write_world(out, w);
  return out.str();
}

inline WorldSpec read_world(std::istream& in) {
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> std::string {
    if (!std::getline(in, line)) throw ParseError(lineno + 1, "world file ends early");
    ++lineno;
    return line;
  };
  auto doubles = [&](std::string_view s) {
    std::vector<double> out;
    for (auto tok : text::tokens(s)) {
      auto v = text::parse_double(tok);
      if (!v) throw ParseError(lineno, "non-numeric value in world file");
      out.push_back(*v);
    }
    return out;
  };
  auto keyed = [&](const char* key) {
    const std::string l = next();
    auto toks = text::tokens(l);
    if (toks.empty() || toks[0] != key) {
      throw ParseError(lineno, std::string("expected '") + key + "' line");
    }
    const std::size_t pos = l.find(key) + std::strlen(key);
    return doubles(std::string_view(l).substr(pos));
  };
  auto count = [&](double x) {
    if (x < 0 || x != std::floor(x)) throw ParseError(lineno, "expected a count");
    return static_cast<std::size_t>(x);
  };
  if (text::trim(next()) != "slaterl-world 1") throw ParseError(1, "not a slaterl-world 1 file");
  WorldSpec w;
  {
    const std::string l = next();
    auto toks = text::tokens(l);
    if (toks.size() != 2 || toks[0] != "seed") throw ParseError(lineno, "expected 'seed' line");
    auto v = text::parse_int<std::uint64_t>(toks[1]);
    if (!v) throw ParseError(lineno, "bad seed");
    w.seed = *v;
  }
  auto g = keyed("geometry");
  auto d = keyed("dims");
  auto e = keyed("effects");
  auto c = keyed("continue");
  if (g.size() != 2 || d.size() != 3 || e.size() != 4 || c.size() != 2) {
    throw ParseError(lineno, "wrong number of values in world header");
  }
  w.page_size = count(g[0]);
  w.row_width = count(g[1]);
  w.portrait_dim = count(d[0]);
  w.click_dim = count(d[1]);
  w.taste_dim = count(d[2]);
  w.decoy = e[0];
  w.position_decay = e[1];
  w.lt_coef = e[2];
  w.exposure_weight = e[3];
  w.continue_bias = c[0];
  w.continue_slope = c[1];
  w.affinity = keyed("affinity");
  if (w.affinity.size() != w.portrait_dim * w.taste_dim) {
    throw ParseError(lineno, "affinity has the wrong size");
  }
  const auto nu = keyed("users");
  if (nu.size() != 1) throw ParseError(lineno, "expected a user count");
  for (std::size_t u = 0, n = count(nu[0]); u < n; ++u) {
    w.users.push_back(doubles(next()));
    if (w.users.back().size() != w.context_dim()) {
      throw ParseError(lineno, "user context has the wrong dimension");
    }
  }
  const auto ni = keyed("items");
  if (ni.size() != 1) throw ParseError(lineno, "expected an item count");
  std::vector<Item> items;
  for (std::size_t i = 0, n = count(ni[0]); i < n; ++i) {
    const std::string l = next();
    auto f = text::split(l, '\t');
    if (f.size() != 5) throw ParseError(lineno, "item line needs 5 tab separated fields");
    auto id = text::parse_int<ItemId>(f[0]);
    auto util = text::parse_double(f[1]);
    auto bias = text::parse_double(f[2]);
    auto pre = text::parse_int<ItemId>(f[3]);
    if (!id || !util || !bias || !pre) throw ParseError(lineno, "bad item line");
    items.push_back(Item{*id, *util, doubles(f[4])});
    w.bias.push_back(*bias);
    w.prereq.push_back(*pre);
  }
  try {
    w.catalog = Catalog(std::move(items));
  } catch (const Error& err) {
    throw ParseError(lineno, err.what());
  }
  for (ItemId pre : w.prereq) {
    if (pre != kNoItem && !w.catalog.contains(pre)) throw ParseError(lineno, "unknown prerequisite");
  }
  if (w.page_size > w.catalog.size()) throw ConfigError("page size exceeds the catalog");
  return w;
}

inline WorldSpec world_from_string(const std::string& s) {
  std::istringstream in(s);
  return read_world(in);
}

}  // namespace slaterl::synth
