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

// Raw exposure log: one page per line, tab separated, list fields space
// separated, header required.

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/logged_data/feedback.hpp"

namespace slaterl {

inline constexpr const char* kLogHeader =
    "timestamp\tsession_id\tsequence_id\texposed_items\tuser_feedback\tuser_portrait\t"
    "click_history\titem_features\tbehavior_policy_id\tbehavior_action_probs";

struct LoggedRow {
  std::int64_t timestamp = 0;
  std::string session_id;
  std::int64_t sequence_id = 1;
  std::vector<ItemId> exposed_items;
  Feedback user_feedback;
  std::vector<double> user_portrait;
  std::vector<double> click_history;
  std::vector<double> item_features;
  std::string behavior_policy_id;
  std::vector<double> behavior_action_probs;

  bool operator==(const LoggedRow&) const = default;
};

/// Expected shapes. Unset dimensions are taken from the first data row and
/// then enforced on the rest.
struct LogSchema {
  std::size_t page_size = 9;
  std::size_t row_width = 3;
  std::optional<std::size_t> portrait_dim;
  std::optional<std::size_t> click_dim;
  std::optional<std::size_t> item_feature_dim;  // whole slate, e.g. 9 x per-item dim

  UnlockLayout layout() const { return UnlockLayout::for_page(page_size, row_width); }
};

namespace detail {

inline std::vector<double> parse_doubles(std::string_view field, std::size_t line,
                                         const char* what) {
  std::vector<double> out;
  for (auto tok : text::tokens(field)) {
    auto v = text::parse_double(tok);
    if (!v) throw ParseError(line, std::string("non-numeric value in ") + what);
    out.push_back(*v);
  }
  return out;
}

inline void check_dim(std::optional<std::size_t>& expected, std::size_t got, std::size_t line,
                      const char* what) {
  if (!expected) {
    expected = got;
  } else if (*expected != got) {
    throw SchemaError("line " + std::to_string(line) + ": " + what + " has " +
                      std::to_string(got) + " values, expected " + std::to_string(*expected));
  }
}

}  // namespace detail

/// Checks a row against the schema (used by both the parser and the writers).
inline void check_row(const LoggedRow& row, LogSchema& schema, std::size_t line = 0) {
  const std::string where = "line " + std::to_string(line) + ": ";
  if (row.exposed_items.size() != schema.page_size) {
    throw SchemaError(where + "exposed_items has " + std::to_string(row.exposed_items.size()) +
                      " entries, expected " + std::to_string(schema.page_size));
  }
  std::unordered_set<ItemId> seen(row.exposed_items.begin(), row.exposed_items.end());
  if (seen.size() != row.exposed_items.size()) throw SchemaError(where + "repeated exposed item");
  if (row.user_feedback.size() != schema.page_size) {
    throw SchemaError(where + "user_feedback has " + std::to_string(row.user_feedback.size()) +
                      " entries, expected " + std::to_string(schema.page_size));
  }
  if (row.behavior_action_probs.size() != schema.page_size) {
    throw SchemaError(where + "behavior_action_probs has wrong length");
  }
  for (double p : row.behavior_action_probs) {
    if (!(p > 0.0 && p <= 1.0)) throw SchemaError(where + "behavior probability outside (0, 1]");
  }
  if (row.sequence_id < 1) throw SchemaError(where + "sequence_id must be at least 1");
  detail::check_dim(schema.portrait_dim, row.user_portrait.size(), line, "user_portrait");
  detail::check_dim(schema.click_dim, row.click_history.size(), line, "click_history");
  detail::check_dim(schema.item_feature_dim, row.item_features.size(), line, "item_features");
  auto check = validate_feedback(row.user_feedback, schema.layout());
  if (!check) throw ValidityError(row.user_feedback, where + check.reason);
}

inline std::vector<LoggedRow> parse_log(std::istream& in, LogSchema schema = {}) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader) throw ParseError(1, "unexpected header");

  std::vector<LoggedRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() != 10) {
      throw ParseError(line_no, "expected 10 fields, found " + std::to_string(f.size()));
    }
    LoggedRow row;
    auto ts = text::parse_int<std::int64_t>(text::trim(f[0]));
    auto seq = text::parse_int<std::int64_t>(text::trim(f[2]));
    if (!ts) throw ParseError(line_no, "non-numeric timestamp");
    if (!seq) throw ParseError(line_no, "non-numeric sequence_id");
    row.timestamp = *ts;
    row.session_id = std::string(text::trim(f[1]));
    if (row.session_id.empty()) throw ParseError(line_no, "empty session_id");
    row.sequence_id = *seq;
    for (auto tok : text::tokens(f[3])) {
      auto id = text::parse_int<ItemId>(tok);
      if (!id) throw ParseError(line_no, "non-numeric item id");
      row.exposed_items.push_back(*id);
    }
    for (auto tok : text::tokens(f[4])) {
      auto v = text::parse_int<int>(tok);
      if (!v) throw ParseError(line_no, "non-numeric feedback flag");
      if (*v != 0 && *v != 1) {
        Feedback raw;
        for (auto t : text::tokens(f[4])) {
          auto x = text::parse_int<int>(t);
          raw.push_back(static_cast<std::uint8_t>(x ? *x : 255));
        }
        throw ValidityError(raw, "line " + std::to_string(line_no) + ": feedback is not binary");
      }
      row.user_feedback.push_back(static_cast<std::uint8_t>(*v));
    }
    row.user_portrait = detail::parse_doubles(f[5], line_no, "user_portrait");
    row.click_history = detail::parse_doubles(f[6], line_no, "click_history");
    row.item_features = detail::parse_doubles(f[7], line_no, "item_features");
    row.behavior_policy_id = std::string(text::trim(f[8]));
    row.behavior_action_probs = detail::parse_doubles(f[9], line_no, "behavior_action_probs");
    check_row(row, schema, line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_log(std::ostream& out, const std::vector<LoggedRow>& rows) {
  out << kLogHeader << '\n';
  for (const LoggedRow& r : rows) {
    out << r.timestamp << '\t' << r.session_id << '\t' << r.sequence_id << '\t'
        << text::join(r.exposed_items, " ", [](ItemId v) { return std::to_string(v); }) << '\t'
        << text::join(r.user_feedback, " ", [](std::uint8_t v) { return std::to_string(v); })
        << '\t' << text::join_doubles(r.user_portrait) << '\t'
        << text::join_doubles(r.click_history) << '\t' << text::join_doubles(r.item_features)
        << '\t' << r.behavior_policy_id << '\t' << text::join_doubles(r.behavior_action_probs)
        << '\n';
  }
}

inline std::string log_to_string(const std::vector<LoggedRow>& rows) {
  std::ostringstream out;
  write_log(out, rows);
  return out.str();
}

}  // namespace slaterl
