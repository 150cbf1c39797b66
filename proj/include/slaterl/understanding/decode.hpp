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
#include <numeric>
#include <string>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/understanding/seq_model.hpp"

namespace slaterl::understanding {

enum class DecodeMethod { greedy, beam, hot_beam };

inline std::string to_string(DecodeMethod m) {
  switch (m) {
    case DecodeMethod::greedy: return "greedy";
    case DecodeMethod::beam: return "beam";
    case DecodeMethod::hot_beam: return "hot-beam";
  }
  return "unknown";
}

struct Sequence {
  std::vector<ItemId> items;
  std::vector<double> step_scores;  // log-probabilities
  double total = 0.0;
};

struct DecodeResult {
  DecodeMethod method = DecodeMethod::greedy;
  std::size_t width = 1;
  std::vector<Sequence> sequences;  // best first
};

/// The `size` items with the highest first-step probability, in that order.
/// Ties go to the earlier catalog entry.
inline std::vector<std::size_t> hot_set(const SeqModel& model, const std::vector<double>& ctx,
                                        std::size_t size) {
  if (size == 0) throw ConfigError("hot set size must be at least 1");
  const auto lp = model.log_probs(ctx, {});
  std::vector<std::size_t> order(lp.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lp[a] > lp[b]; });
  order.resize(std::min(size, order.size()));
  return order;
}

namespace detail {

struct Partial {
  std::vector<std::size_t> idx;
  std::vector<double> steps;
  double total = 0.0;
};

// Higher total first; equal totals fall back to the index sequence so the
// order never depends on the sort implementation.
inline bool better(const Partial& a, const Partial& b) {
  if (a.total != b.total) return a.total > b.total;
  return a.idx < b.idx;
}

inline std::vector<Partial> search(const SeqModel& model, const std::vector<double>& ctx,
                                   std::size_t K, std::size_t width,
                                   const std::vector<std::size_t>* allowed) {
  std::vector<Partial> beams(1);
  std::vector<char> ok(model.size(), allowed ? 0 : 1);
  if (allowed) {
    for (std::size_t i : *allowed) ok.at(i) = 1;
  }
  for (std::size_t step = 0; step < K; ++step) {
    std::vector<Partial> next;
    for (const auto& b : beams) {
      const auto lp = model.log_probs(ctx, b.idx);
      for (std::size_t j = 0; j < lp.size(); ++j) {
        if (!ok[j] || std::isinf(lp[j])) continue;
        Partial p = b;
        p.idx.push_back(j);
        p.steps.push_back(lp[j]);
        p.total += lp[j];
        next.push_back(std::move(p));
      }
    }
    if (next.size() > width) {
      std::partial_sort(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(width), next.end(),
                        better);
      next.resize(width);
    } else {
      std::sort(next.begin(), next.end(), better);
    }
    beams = std::move(next);
    if (beams.empty()) break;
  }
  return beams;
}

inline DecodeResult pack(const SeqModel& model, DecodeMethod method, std::size_t width,
                         std::vector<Partial> found) {
  DecodeResult r;
  r.method = method;
  r.width = width;
  const auto& items = model.catalog().items();
  for (auto& p : found) {
    Sequence s;
    for (std::size_t i : p.idx) s.items.push_back(items[i].id);
    s.step_scores = std::move(p.steps);
    s.total = p.total;
    r.sequences.push_back(std::move(s));
  }
  return r;
}

}  // namespace detail

inline void check_k(std::size_t K, std::size_t pool) {
  if (K == 0) throw ConfigError("K must be at least 1");
  if (K > pool) {
    throw SizeError("cannot decode " + std::to_string(K) + " distinct items from " +
                    std::to_string(pool));
  }
}

/// Most likely item at every step.
inline DecodeResult decode_greedy(const SeqModel& model, const std::vector<double>& ctx,
                                  std::size_t K) {
  check_k(K, model.size());
  return detail::pack(model, DecodeMethod::greedy, 1, detail::search(model, ctx, K, 1, nullptr));
}

/// Beam search; returns every feasible sequence when there are fewer than
/// `width` of them.
inline DecodeResult decode_beam(const SeqModel& model, const std::vector<double>& ctx,
                                std::size_t K, std::size_t width) {
  if (width == 0) throw ConfigError("beam width must be at least 1");
  check_k(K, model.size());
  return detail::pack(model, DecodeMethod::beam, width,
                      detail::search(model, ctx, K, width, nullptr));
}

/// Beam search with candidates restricted to `hot` (dense indices) at every step.
inline DecodeResult decode_hot_beam(const SeqModel& model, const std::vector<double>& ctx,
                                    std::size_t K, std::size_t width,
                                    const std::vector<std::size_t>& hot) {
  if (width == 0) throw ConfigError("beam width must be at least 1");
  if (hot.empty()) throw ConfigError("hot set is empty");
  check_k(K, hot.size());
  return detail::pack(model, DecodeMethod::hot_beam, width,
                      detail::search(model, ctx, K, width, &hot));
}

}  // namespace slaterl::understanding
