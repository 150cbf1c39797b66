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

// Purchase-probability model. A logistic model (optionally with one tanh
// hidden layer) gives q_i, the probability that position i is bought once its
// row is unlocked; SlatePrediction turns these into the page distribution.
// It is fitted only on positions that were unlocked in the logged feedback,
// since a locked position carries no purchase decision. A second logistic
// head predicts whether the session continues after a page.

#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/optim.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/logged_data/session.hpp"
#include "slaterl/slate_env/response_model.hpp"
#include "slaterl/user_model/features.hpp"

namespace slaterl {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// One logged page with everything a response model conditions on.
struct PageRecord {
  std::vector<double> user_context;
  std::size_t page_index = 0;
  std::vector<CompletedPage> history;
  std::vector<ItemId> items;
  Feedback feedback;
  bool has_next = false;  // the following page is real (not padding)

  SlateState state() const {
    SlateState s;
    s.user_context = user_context;
    s.page_index = page_index;
    s.history = history;
    return s;
  }
};

inline std::vector<PageRecord> page_records(const SessionRecord& session) {
  std::vector<PageRecord> out;
  std::vector<CompletedPage> history;
  const std::vector<double> ctx = session.user_context();
  for (std::size_t p = 0; p < session.pages.size(); ++p) {
    const LoggedPage& page = session.pages[p];
    if (page.padded) break;
    PageRecord r;
    r.user_context = ctx;
    r.page_index = p;
    r.history = history;
    r.items = page.items;
    r.feedback = page.feedback;
    r.has_next = p + 1 < session.pages.size() && !session.pages[p + 1].padded;
    out.push_back(std::move(r));
    history.push_back(CompletedPage{page.items, page.feedback});
  }
  return out;
}

inline std::vector<PageRecord> page_records(const std::vector<SessionRecord>& sessions) {
  std::vector<PageRecord> out;
  for (const auto& s : sessions) {
    auto r = page_records(s);
    out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  return out;
}

struct UserModelConfig {
  std::size_t hidden = 0;  // 0 = plain logistic model
  double l2 = 1e-4;
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  bool item_onehot = true;
  bool interaction = true;
  bool history = true;
};

/// Design matrix for the purchase head, row major.
struct Examples {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::size_t size() const { return y.size(); }
  const double* row(std::size_t i) const { return x.data() + i * dim; }
};

/// Mean logistic loss of the purchase head plus l2/2 |weights|^2 (biases not
/// penalized). Parameter layout: linear [w(F), b]; hidden
/// [W(H x F), c(H), v(H), b].
inline double purchase_loss(const std::vector<double>& params, const Examples& data,
                            std::size_t hidden, double l2, std::vector<double>* grad) {
  const std::size_t F = data.dim;
  const std::size_t n = data.size();
  if (grad) grad->assign(params.size(), 0.0);
  double loss = 0.0;
  const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
  if (hidden == 0) {
    const double* w = params.data();
    const double b = params[F];
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = data.row(i);
      double z = b;
      for (std::size_t d = 0; d < F; ++d) z += w[d] * xi[d];
      const double y = data.y[i];
      loss += softplus(z) - y * z;
      if (grad) {
        const double dz = (sigmoid(z) - y) * inv_n;
        double* g = grad->data();
        for (std::size_t d = 0; d < F; ++d) g[d] += dz * xi[d];
        g[F] += dz;
      }
    }
    loss *= inv_n;
    for (std::size_t d = 0; d < F; ++d) {
      loss += 0.5 * l2 * w[d] * w[d];
      if (grad) (*grad)[d] += l2 * w[d];
    }
    return loss;
  }
  const std::size_t H = hidden;
  const double* W = params.data();
  const double* c = W + H * F;
  const double* v = c + H;
  const double b = v[H];
  std::vector<double> h(H);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = data.row(i);
    double z = b;
    for (std::size_t k = 0; k < H; ++k) {
      double a = c[k];
      const double* Wk = W + k * F;
      for (std::size_t d = 0; d < F; ++d) a += Wk[d] * xi[d];
      h[k] = std::tanh(a);
      z += v[k] * h[k];
    }
    const double y = data.y[i];
    loss += softplus(z) - y * z;
    if (grad) {
      const double dz = (sigmoid(z) - y) * inv_n;
      double* gW = grad->data();
      double* gc = gW + H * F;
      double* gv = gc + H;
      gv[H] += dz;
      for (std::size_t k = 0; k < H; ++k) {
        gv[k] += dz * h[k];
        const double da = dz * v[k] * (1.0 - h[k] * h[k]);
        gc[k] += da;
        double* gWk = gW + k * F;
        for (std::size_t d = 0; d < F; ++d) gWk[d] += da * xi[d];
      }
    }
  }
  loss *= inv_n;
  for (std::size_t j = 0; j < H * F; ++j) {
    loss += 0.5 * l2 * W[j] * W[j];
    if (grad) (*grad)[j] += l2 * W[j];
  }
  for (std::size_t k = 0; k < H; ++k) {
    loss += 0.5 * l2 * v[k] * v[k];
    if (grad) (*grad)[H * F + H + k] += l2 * v[k];
  }
  return loss;
}

struct FitReport {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  std::vector<double> loss_curve;
  std::size_t item_examples = 0;
  std::size_t continue_examples = 0;
};

class UserModel : public ResponseModel {
 public:
  UserModel() = default;
  UserModel(Catalog catalog, FeatureSpec spec, std::size_t hidden)
      : catalog_(std::move(catalog)), spec_(spec), layout_(spec), hidden_(hidden) {
    mean_.assign(layout_.size, 0.0);
    scale_.assign(layout_.size, 1.0);
    params_.assign(param_count(), 0.0);
    continue_params_.assign(continue_dim() + 1, 0.0);
  }

  std::size_t user_dim() const override { return spec_.user_dim; }
  const Catalog& catalog() const { return catalog_; }
  const FeatureSpec& spec() const { return spec_; }
  std::size_t hidden() const { return hidden_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }
  const std::vector<double>& continue_params() const { return continue_params_; }
  std::string trained_on;

  std::size_t feature_dim() const { return layout_.size; }
  std::size_t param_count() const {
    return hidden_ == 0 ? layout_.size + 1 : hidden_ * layout_.size + 2 * hidden_ + 1;
  }
  std::size_t continue_dim() const { return spec_.user_dim + 3 + spec_.max_pages; }

  /// Standardized features of one candidate.
  void features(std::span<const double> ctx, std::span<const ItemId> slate, std::size_t position,
                std::size_t page, const HistorySummary& hist, std::vector<double>& out) const {
    featurize_into(spec_, layout_, catalog_, ctx, slate, slate[position], position, page, hist,
                   out);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = (out[d] - mean_[d]) / scale_[d];
  }

  double logit(const double* x) const {
    const std::size_t F = layout_.size;
    if (hidden_ == 0) {
      double z = params_[F];
      for (std::size_t d = 0; d < F; ++d) z += params_[d] * x[d];
      return z;
    }
    const double* W = params_.data();
    const double* c = W + hidden_ * F;
    const double* v = c + hidden_;
    double z = v[hidden_];
    for (std::size_t k = 0; k < hidden_; ++k) {
      double a = c[k];
      for (std::size_t d = 0; d < F; ++d) a += W[k * F + d] * x[d];
      z += v[k] * std::tanh(a);
    }
    return z;
  }

  std::vector<double> conditional_probs(const SlateState& state,
                                        std::span<const ItemId> slate) const override {
    if (slate.size() != spec_.page_size) {
      throw ContractError("predict: slate has " + std::to_string(slate.size()) +
                          " items, expected " + std::to_string(spec_.page_size));
    }
    const HistorySummary hist = summarize_history(catalog_, state.history);
    std::vector<double> x, out(slate.size());
    for (std::size_t i = 0; i < slate.size(); ++i) {
      features(state.user_context, slate, i, state.page_index, hist, x);
      out[i] = sigmoid(logit(x.data()));
    }
    return out;
  }

  std::vector<double> continue_features(const SlateState& after_page) const {
    if (after_page.history.empty()) throw ContractError("continue_prob needs a completed page");
    const CompletedPage& page = after_page.history.back();
    std::vector<double> f(after_page.user_context);
    double bought = 0.0, value = 0.0;
    for (std::size_t i = 0; i < page.items.size(); ++i) {
      if (page.feedback[i]) {
        bought += 1.0;
        value += catalog_.utility(page.items[i]);
      }
    }
    const double n = static_cast<double>(std::max<std::size_t>(page.items.size(), 1));
    f.push_back(bought / n);
    f.push_back(value / (n * catalog_.utility_scale()));
    f.push_back(bought == n ? 1.0 : 0.0);
    for (std::size_t p = 0; p < spec_.max_pages; ++p) {
      f.push_back(p == after_page.history.size() - 1 ? 1.0 : 0.0);
    }
    return f;
  }

  double continue_prob(const SlateState& after_page) const override {
    const auto f = continue_features(after_page);
    double z = continue_params_.back();
    for (std::size_t d = 0; d < f.size(); ++d) z += continue_params_[d] * f[d];
    return sigmoid(z);
  }

  /// Hidden-layer activations for a state (no candidate item): the context,
  /// position, page and co-displayed blocks are filled, item blocks are zero.
  std::vector<double> embed_state(const SlateState& s) const {
    if (hidden_ == 0) throw ConfigError("state embedding needs a model with a hidden layer");
    std::vector<double> x(layout_.size, 0.0);
    std::copy(s.user_context.begin(), s.user_context.end(), x.begin() + layout_.user);
    x[layout_.position + std::min(s.chosen_items.size(), spec_.page_size - 1)] = 1.0;
    x[layout_.page + std::min(s.page_index, spec_.max_pages - 1)] = 1.0;
    const double scale = catalog_.utility_scale();
    double sum = 0, mx = 0;
    for (std::size_t k = 0; k < s.chosen_items.size(); ++k) {
      const double u = catalog_.utility(s.chosen_items[k]) / scale;
      sum += u;
      mx = k == 0 ? u : std::max(mx, u);
    }
    if (!s.chosen_items.empty()) {
      x[layout_.codisplay] = sum / static_cast<double>(s.chosen_items.size());
      x[layout_.codisplay + 1] = mx;
    }
    x[layout_.codisplay + 2] =
        static_cast<double>(s.chosen_items.size()) / static_cast<double>(spec_.page_size);
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = (x[d] - mean_[d]) / scale_[d];
    const std::size_t F = layout_.size;
    std::vector<double> h(hidden_);
    for (std::size_t k = 0; k < hidden_; ++k) {
      double a = params_[hidden_ * F + k];
      for (std::size_t d = 0; d < F; ++d) a += params_[k * F + d] * x[d];
      h[k] = std::tanh(a);
    }
    return h;
  }

  /// Training rows: every position that was unlocked under the logged feedback.
  Examples build_examples(const std::vector<PageRecord>& pages, bool standardized) const {
    Examples ex;
    ex.dim = layout_.size;
    const UnlockLayout unlock = UnlockLayout::for_page(spec_.page_size, row_width_);
    std::vector<double> x;
    for (const PageRecord& r : pages) {
      const HistorySummary hist = summarize_history(catalog_, r.history);
      for (std::size_t i = 0; i < r.items.size(); ++i) {
        if (!position_unlocked(r.feedback, i, unlock)) break;
        featurize_into(spec_, layout_, catalog_, r.user_context, r.items, r.items[i], i,
                       r.page_index, hist, x);
        if (standardized) {
          for (std::size_t d = 0; d < x.size(); ++d) x[d] = (x[d] - mean_[d]) / scale_[d];
        }
        ex.x.insert(ex.x.end(), x.begin(), x.end());
        ex.y.push_back(r.feedback[i] ? 1.0 : 0.0);
      }
    }
    return ex;
  }

  std::size_t row_width() const { return row_width_; }
  void set_row_width(std::size_t w) { row_width_ = w; }

  void fit_standardization(const Examples& raw) {
    const std::size_t n = raw.size();
    mean_.assign(layout_.size, 0.0);
    scale_.assign(layout_.size, 1.0);
    if (n == 0) return;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < raw.dim; ++d) mean_[d] += raw.row(i)[d];
    }
    for (double& m : mean_) m /= static_cast<double>(n);
    std::vector<double> var(layout_.size, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < raw.dim; ++d) {
        const double e = raw.row(i)[d] - mean_[d];
        var[d] += e * e;
      }
    }
    for (std::size_t d = 0; d < layout_.size; ++d) {
      const double sd = std::sqrt(var[d] / static_cast<double>(n));
      scale_[d] = sd > 1e-12 ? sd : 1.0;
    }
  }

  const std::vector<double>& feature_mean() const { return mean_; }
  const std::vector<double>& feature_scale() const { return scale_; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "slaterl-user-model";
    j["version"] = 1;
    j["feature_spec"] = spec_;
    j["row_width"] = row_width_;
    j["hidden"] = hidden_;
    j["trained_on"] = trained_on;
    j["feature_mean"] = mean_;
    j["feature_scale"] = scale_;
    j["purchase_params"] = params_;
    j["continue_params"] = continue_params_;
    return j;
  }

  static UserModel from_json(const nlohmann::json& j, Catalog catalog) {
    try {
      if (j.at("format").get<std::string>() != "slaterl-user-model") {
        throw SchemaError("not a user model checkpoint");
      }
      if (j.at("version").get<int>() != 1) throw SchemaError("unsupported checkpoint version");
      FeatureSpec spec = j.at("feature_spec").get<FeatureSpec>();
      if (spec.item_dim != catalog.feature_dim() ||
          (spec.item_onehot && spec.catalog_size != catalog.size())) {
        throw CatalogError("checkpoint was fitted on a different catalog");
      }
      UserModel m(std::move(catalog), spec, j.at("hidden").get<std::size_t>());
      m.row_width_ = j.at("row_width").get<std::size_t>();
      m.trained_on = j.at("trained_on").get<std::string>();
      m.mean_ = j.at("feature_mean").get<std::vector<double>>();
      m.scale_ = j.at("feature_scale").get<std::vector<double>>();
      m.params_ = j.at("purchase_params").get<std::vector<double>>();
      m.continue_params_ = j.at("continue_params").get<std::vector<double>>();
      if (m.mean_.size() != m.layout_.size || m.scale_.size() != m.layout_.size ||
          m.params_.size() != m.param_count() ||
          m.continue_params_.size() != m.continue_dim() + 1) {
        throw SchemaError("checkpoint arrays do not match the feature spec");
      }
      for (double w : m.params_) {
        if (!std::isfinite(w)) throw SchemaError("checkpoint has non-finite weights");
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("bad user model checkpoint: ") + e.what());
    }
  }

  std::string save() const { return to_json().dump(1) + "\n"; }
  static UserModel load(std::string_view text, Catalog catalog) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(1, e.what());
    }
    return from_json(j, std::move(catalog));
  }

  bool operator==(const UserModel& o) const {
    return catalog_ == o.catalog_ && spec_ == o.spec_ && hidden_ == o.hidden_ &&
           row_width_ == o.row_width_ && mean_ == o.mean_ && scale_ == o.scale_ &&
           params_ == o.params_ && continue_params_ == o.continue_params_ &&
           trained_on == o.trained_on;
  }

  void init_params(std::uint64_t seed) {
    params_.assign(param_count(), 0.0);
    if (hidden_ == 0) return;
    Rng rng = make_rng(seed, "user-model-init");
    const double s = 1.0 / std::sqrt(static_cast<double>(layout_.size));
    for (std::size_t j = 0; j < hidden_ * layout_.size; ++j) params_[j] = s * normal(rng);
  }

  void set_continue_params(std::vector<double> p) { continue_params_ = std::move(p); }

 private:
  Catalog catalog_;
  FeatureSpec spec_;
  FeatureLayout layout_{FeatureSpec{}};
  std::size_t hidden_ = 0;
  std::size_t row_width_ = 3;
  std::vector<double> mean_, scale_;
  std::vector<double> params_;
  std::vector<double> continue_params_;
};

/// Fits both heads by full-batch descent. Deterministic under cfg.seed.
inline std::pair<UserModel, FitReport> fit_user_model(const std::vector<PageRecord>& train,
                                                      const Catalog& catalog,
                                                      const EpisodeConfig& episode,
                                                      const UserModelConfig& cfg) {
  if (train.empty()) throw EmptyDataError("no training pages");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  FeatureSpec spec = FeatureSpec::for_catalog(catalog, train.front().user_context.size(), episode);
  spec.item_onehot = cfg.item_onehot;
  spec.interaction = cfg.interaction;
  spec.history = cfg.history && episode.max_pages > 1;
  UserModel model(catalog, spec, cfg.hidden);
  model.set_row_width(episode.row_width);
  model.init_params(cfg.seed);

  FitReport report;
  model.fit_standardization(model.build_examples(train, false));
  const Examples data = model.build_examples(train, true);
  report.item_examples = data.size();
  if (data.size() == 0) throw EmptyDataError("no unlocked positions to train on");

  std::vector<double> params = model.params();
  optim::DescentConfig dc;
  dc.epochs = cfg.epochs;
  dc.learning_rate = cfg.learning_rate;
  auto res = optim::descend(
      params,
      [&](const std::vector<double>& p, std::vector<double>& g) {
        return purchase_loss(p, data, cfg.hidden, cfg.l2, &g);
      },
      dc, "purchase loss");
  model.mutable_params() = params;
  report.epochs_run = res.epochs_run;
  report.final_loss = res.final_loss;
  report.loss_curve = res.loss_curve;

  // continue head: plain logistic regression on pages that could be followed
  Examples cont;
  cont.dim = model.continue_dim();
  for (const PageRecord& r : train) {
    if (r.page_index + 1 >= episode.max_pages) continue;
    SlateState after = r.state();
    after.history.push_back(CompletedPage{r.items, r.feedback});
    auto f = model.continue_features(after);
    cont.x.insert(cont.x.end(), f.begin(), f.end());
    cont.y.push_back(r.has_next ? 1.0 : 0.0);
  }
  report.continue_examples = cont.size();
  std::vector<double> cp(cont.dim + 1, 0.0);
  if (cont.size() > 0) {
    optim::DescentConfig cc;
    cc.epochs = cfg.epochs;
    cc.learning_rate = cfg.learning_rate;
    optim::descend(
        cp,
        [&](const std::vector<double>& p, std::vector<double>& g) {
          return purchase_loss(p, cont, 0, cfg.l2, &g);
        },
        cc, "continue loss");
  }
  model.set_continue_params(cp);
  return {std::move(model), report};
}

}  // namespace slaterl
