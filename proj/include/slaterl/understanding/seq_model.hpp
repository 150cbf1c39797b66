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

// Autoregressive next-item model for purchase sequences. The logit of item j
// after a decoded prefix is
//
//   b_j + ctx . U_j + T[last, j] + mean_{i in prefix} B[i, j]
//
// with T's row 0 standing for "nothing decoded yet". The softmax runs over
// the items not yet decoded. All weights start at zero, so an untrained
// model is uniform.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/optim.hpp"
#include "slaterl/logged_data/session.hpp"

namespace slaterl::understanding {

struct SeqConfig {
  std::size_t K = 5;
  std::size_t epochs = 300;
  double learning_rate = 1.0;
  double l2 = 1e-4;
};

/// One training sequence: context and the first K purchased item indices.
struct PurchaseSequence {
  std::vector<double> context;
  std::vector<std::size_t> items;  // dense catalog indices
};

/// Purchases of a session in display order: page by page, position by
/// position. Padded pages carry no purchases. An item bought again on a later
/// page is kept once, since decoded sequences never repeat an item.
inline std::vector<ItemId> purchases(const SessionRecord& s) {
  std::vector<ItemId> out;
  for (const auto& page : s.pages) {
    if (page.padded) continue;
    for (std::size_t k = 0; k < page.items.size(); ++k) {
      if (page.feedback[k] && std::find(out.begin(), out.end(), page.items[k]) == out.end()) {
        out.push_back(page.items[k]);
      }
    }
  }
  return out;
}

class SeqModel {
 public:
  SeqModel() = default;
  SeqModel(const Catalog& catalog, std::size_t context_dim)
      : catalog_(&catalog), n_(catalog.size()), d_(context_dim),
        params_(n_ + d_ * n_ + (n_ + 1) * n_ + n_ * n_, 0.0) {
    if (n_ == 0) throw EmptyDataError("sequence model needs a non-empty catalog");
  }

  const Catalog& catalog() const { return *catalog_; }
  std::size_t context_dim() const { return d_; }
  std::size_t size() const { return n_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Raw logits over the whole catalog for a prefix of dense indices.
  std::vector<double> logits(const std::vector<double>& ctx,
                             const std::vector<std::size_t>& prefix) const {
    return logits_with(params_, ctx, prefix);
  }

  /// log p(j | ctx, prefix); -inf for items already in the prefix.
  std::vector<double> log_probs(const std::vector<double>& ctx,
                                const std::vector<std::size_t>& prefix) const {
    auto z = logits(ctx, prefix);
    mask_and_normalize(z, prefix);
    return z;
  }

  /// Same over item ids.
  std::vector<double> log_probs_ids(const std::vector<double>& ctx,
                                    const std::vector<ItemId>& prefix) const {
    std::vector<std::size_t> idx;
    for (ItemId id : prefix) idx.push_back(catalog_->index_of(id));
    return log_probs(ctx, idx);
  }

  /// Mean next-item cross-entropy plus l2, with its gradient.
  double loss(const std::vector<double>& theta, std::vector<double>& grad,
              const std::vector<PurchaseSequence>& data, double l2) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    std::size_t events = 0;
    std::vector<std::size_t> prefix;
    for (const auto& seq : data) {
      prefix.clear();
      for (std::size_t target : seq.items) {
        auto z = logits_with(theta, seq.context, prefix);
        mask_and_normalize(z, prefix);
        total -= z[target];
        ++events;
        // d(-log p_target)/dz_j = p_j - [j == target]
        for (std::size_t j = 0; j < n_; ++j) {
          if (std::isinf(z[j])) continue;
          const double g = std::exp(z[j]) - (j == target ? 1.0 : 0.0);
          add_grad(grad, seq.context, prefix, j, g);
        }
        prefix.push_back(target);
      }
    }
    const double inv = 1.0 / static_cast<double>(events);
    total *= inv;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      grad[p] = grad[p] * inv + l2 * theta[p];
      total += 0.5 * l2 * theta[p] * theta[p];
    }
    return total;
  }

 private:
  std::size_t off_u() const { return n_; }
  std::size_t off_t() const { return n_ + d_ * n_; }
  std::size_t off_b() const { return n_ + d_ * n_ + (n_ + 1) * n_; }

  std::vector<double> logits_with(const std::vector<double>& theta, const std::vector<double>& ctx,
                                  const std::vector<std::size_t>& prefix) const {
    if (ctx.size() != d_) {
      throw ContractError("context has dimension " + std::to_string(ctx.size()) + ", expected " +
                          std::to_string(d_));
    }
    std::vector<double> z(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t u = 0; u < d_; ++u) {
      const double* row = &theta[off_u() + u * n_];
      for (std::size_t j = 0; j < n_; ++j) z[j] += ctx[u] * row[j];
    }
    const std::size_t last = prefix.empty() ? 0 : prefix.back() + 1;
    const double* trow = &theta[off_t() + last * n_];
    for (std::size_t j = 0; j < n_; ++j) z[j] += trow[j];
    if (!prefix.empty()) {
      const double w = 1.0 / static_cast<double>(prefix.size());
      for (std::size_t i : prefix) {
        const double* brow = &theta[off_b() + i * n_];
        for (std::size_t j = 0; j < n_; ++j) z[j] += w * brow[j];
      }
    }
    return z;
  }

  void add_grad(std::vector<double>& grad, const std::vector<double>& ctx,
                const std::vector<std::size_t>& prefix, std::size_t j, double g) const {
    grad[j] += g;
    for (std::size_t u = 0; u < d_; ++u) grad[off_u() + u * n_ + j] += g * ctx[u];
    const std::size_t last = prefix.empty() ? 0 : prefix.back() + 1;
    grad[off_t() + last * n_ + j] += g;
    if (!prefix.empty()) {
      const double w = g / static_cast<double>(prefix.size());
      for (std::size_t i : prefix) grad[off_b() + i * n_ + j] += w;
    }
  }

  void mask_and_normalize(std::vector<double>& z, const std::vector<std::size_t>& prefix) const {
    if (prefix.size() >= n_) throw ContractError("no items left to decode");
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    for (std::size_t i : prefix) z[i] = ninf;
    double m = ninf;
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (double v : z) s += std::isinf(v) ? 0.0 : std::exp(v - m);
    const double lse = m + std::log(s);
    for (double& v : z) {
      if (!std::isinf(v)) v -= lse;
    }
  }

  const Catalog* catalog_ = nullptr;
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> params_;
};

struct SeqFit {
  SeqModel model;
  std::size_t sessions_used = 0;
  std::size_t sessions_skipped = 0;  // no purchases
  optim::DescentResult descent;
};

/// Fits on the first K purchases of every session that has any.
inline SeqFit fit_seq_model(const std::vector<SessionRecord>& sessions, const Catalog& catalog,
                            const SeqConfig& cfg = {}) {
  if (cfg.K == 0) throw ConfigError("K must be at least 1");
  if (!(cfg.l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  SeqFit fit;
  std::vector<PurchaseSequence> data;
  std::size_t dim = 0;
  bool have_dim = false;
  for (const auto& s : sessions) {
    auto bought = purchases(s);
    if (bought.empty()) {
      ++fit.sessions_skipped;
      continue;
    }
    PurchaseSequence seq;
    seq.context = s.user_context();
    if (!have_dim) {
      dim = seq.context.size();
      have_dim = true;
    } else if (seq.context.size() != dim) {
      throw ContractError("session " + s.session_id + " has a context of a different dimension");
    }
    if (bought.size() > cfg.K) bought.resize(cfg.K);
    for (ItemId id : bought) seq.items.push_back(catalog.index_of(id));
    data.push_back(std::move(seq));
  }
  if (data.empty()) throw EmptyDataError("no session has a purchase");
  fit.sessions_used = data.size();
  fit.model = SeqModel(catalog, dim);
  optim::DescentConfig dc;
  dc.epochs = cfg.epochs;
  dc.learning_rate = cfg.learning_rate;
  const SeqModel& m = fit.model;
  fit.descent = optim::descend(
      fit.model.params(),
      [&](const std::vector<double>& th, std::vector<double>& g) { return m.loss(th, g, data, cfg.l2); },
      dc, "sequence model loss");
  return fit;
}

}  // namespace slaterl::understanding
