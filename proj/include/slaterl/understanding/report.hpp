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

// Sequence scores are log-likelihoods; the table compares them as
// probabilities, exp(total), so every column is a ratio of average sequence
// probabilities to the top-5% average.

#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/error.hpp"
#include "slaterl/core/stats.hpp"
#include "slaterl/understanding/decode.hpp"

namespace slaterl::understanding {

struct UnderstandConfig {
  std::size_t K = 5;
  std::size_t width = 100;
  std::size_t hot_size = 100;
};

struct UnderstandReport {
  std::size_t users = 0;
  std::size_t K = 0;
  std::size_t width = 0;
  // normalized by the top-5% average
  double top5pct = 0.0;
  double top20pct = 0.0;
  double greedy = 0.0;
  double hot5pct = 0.0;
  double hot20pct = 0.0;
  double top5_average = 0.0;  // the normalizer, as a probability
  std::vector<double> pearson;   // [k-1] = k-Pearson
  std::vector<double> spearman;
  std::size_t min_beam = 0;      // smallest beam set over users
  bool degenerate_quantiles = false;  // some beam set had fewer than 20 sequences
};

/// Number of sequences in the top `frac` of n, at least one.
inline std::size_t top_count(double frac, std::size_t n) {
  const auto c = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9));
  return std::max<std::size_t>(1, std::min(c, n));
}

inline double mean_probability(const std::vector<Sequence>& seqs, std::size_t count) {
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) s += std::exp(seqs[i].total);
  return s / static_cast<double>(count);
}

/// k-Pearson and k-Spearman over one decode set, prefix score against total.
inline std::pair<std::vector<double>, std::vector<double>> prefix_correlations(
    const DecodeResult& r, std::size_t K) {
  std::vector<double> pe(K), sp(K);
  std::vector<double> total;
  for (const auto& s : r.sequences) total.push_back(s.total);
  for (std::size_t k = 1; k <= K; ++k) {
    std::vector<double> prefix;
    for (const auto& s : r.sequences) {
      if (s.step_scores.size() != K) throw ContractError("sequence length differs from K");
      double p = 0.0;
      for (std::size_t i = 0; i < k; ++i) p += s.step_scores[i];
      prefix.push_back(k == K ? s.total : p);
    }
    pe[k - 1] = stats::pearson(prefix, total);
    sp[k - 1] = stats::spearman(prefix, total);
  }
  return {pe, sp};
}

inline UnderstandReport understanding_report(const SeqModel& model,
                                             const std::vector<std::vector<double>>& users,
                                             const UnderstandConfig& cfg = {}) {
  if (users.empty()) throw EmptyDataError("understanding report needs test users");
  UnderstandReport rep;
  rep.users = users.size();
  rep.K = cfg.K;
  rep.width = cfg.width;
  rep.min_beam = static_cast<std::size_t>(-1);
  double top5 = 0.0, top20 = 0.0, greedy = 0.0, hot5 = 0.0, hot20 = 0.0;
  std::vector<double> pe_sum(cfg.K, 0.0), sp_sum(cfg.K, 0.0);
  std::vector<std::size_t> pe_n(cfg.K, 0), sp_n(cfg.K, 0);
  for (const auto& ctx : users) {
    const auto beam = decode_beam(model, ctx, cfg.K, cfg.width);
    const auto& seqs = beam.sequences;
    const std::size_t n = seqs.size();
    rep.min_beam = std::min(rep.min_beam, n);
    top5 += mean_probability(seqs, top_count(0.05, n));
    top20 += mean_probability(seqs, top_count(0.20, n));
    greedy += std::exp(decode_greedy(model, ctx, cfg.K).sequences.front().total);
    const auto hot = decode_hot_beam(model, ctx, cfg.K, cfg.width, hot_set(model, ctx, cfg.hot_size));
    const std::size_t h = hot.sequences.size();
    hot5 += mean_probability(hot.sequences, top_count(0.05, h));
    hot20 += mean_probability(hot.sequences, top_count(0.20, h));
    const auto [pe, sp] = prefix_correlations(beam, cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
      // a beam set with constant scores has no correlation to report
      if (std::isfinite(pe[k])) pe_sum[k] += pe[k], ++pe_n[k];
      if (std::isfinite(sp[k])) sp_sum[k] += sp[k], ++sp_n[k];
    }
  }
  rep.degenerate_quantiles = rep.min_beam < 20;
  const double u = static_cast<double>(users.size());
  rep.top5_average = top5 / u;
  if (!(rep.top5_average > 0.0)) throw UndefinedError("top-5% average probability underflows to 0");
  rep.top5pct = 1.0;
  rep.top20pct = top20 / top5;
  rep.greedy = greedy / top5;
  rep.hot5pct = hot5 / top5;
  rep.hot20pct = hot20 / top5;
  for (std::size_t k = 0; k < cfg.K; ++k) {
    rep.pearson.push_back(pe_n[k] ? pe_sum[k] / static_cast<double>(pe_n[k]) : std::nan(""));
    rep.spearman.push_back(sp_n[k] ? sp_sum[k] / static_cast<double>(sp_n[k]) : std::nan(""));
  }
  return rep;
}

inline std::string fmt2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

using NamedReport = std::pair<std::string, UnderstandReport>;

/// One row per report: "Score of\t5%\t20%\tgreedy\thot 5%\thot 20%".
inline std::string score_table(const std::vector<NamedReport>& reports) {
  std::string out = "Score of\t5%\t20%\tgreedy\thot 5%\thot 20%\n";
  for (const auto& [name, r] : reports) {
    out += name + "\t" + fmt2(r.top5pct) + "\t" + fmt2(r.top20pct) + "\t" + fmt2(r.greedy) + "\t" +
           fmt2(r.hot5pct) + "\t" + fmt2(r.hot20pct) + "\n";
  }
  return out;
}

/// Rows k-Pearson, k-Spearman for k = 1..K; one column per report.
inline std::string correlation_table(const std::vector<NamedReport>& reports) {
  if (reports.empty()) return "";
  std::string out = "k";
  for (const auto& nr : reports) out += "\t" + nr.first;
  out += "\n";
  const std::size_t K = reports.front().second.K;
  for (std::size_t k = 1; k <= K; ++k) {
    for (int which = 0; which < 2; ++which) {
      out += std::to_string(k) + (which == 0 ? "-Pearson" : "-Spearman");
      for (const auto& nr : reports) {
        const auto& v = which == 0 ? nr.second.pearson : nr.second.spearman;
        out += "\t" + (k <= v.size() ? fmt2(v[k - 1]) : std::string("nan"));
      }
      out += "\n";
    }
  }
  return out;
}

inline nlohmann::json to_json(const UnderstandReport& r) {
  auto nums = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) {
      if (std::isfinite(x)) a.push_back(x);
      else a.push_back(nullptr);
    }
    return a;
  };
  return {{"users", r.users},
          {"K", r.K},
          {"width", r.width},
          {"top5pct", r.top5pct},
          {"top20pct", r.top20pct},
          {"greedy", r.greedy},
          {"hot5pct", r.hot5pct},
          {"hot20pct", r.hot20pct},
          {"top5_average", r.top5_average},
          {"pearson", nums(r.pearson)},
          {"spearman", nums(r.spearman)},
          {"min_beam", r.min_beam},
          {"degenerate_quantiles", r.degenerate_quantiles}};
}

}  // namespace slaterl::understanding
