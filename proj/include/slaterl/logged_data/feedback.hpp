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

// The unlock rule. A page is laid out as rows of items, left to right and top
// to bottom; a row only becomes purchasable once every item of every row
// above it was purchased. On the default 3x3 page this leaves 22 of the 512
// binary feedback patterns.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slaterl/core/error.hpp"

namespace slaterl {

using Feedback = std::vector<std::uint8_t>;

struct UnlockLayout {
  std::size_t rows = 3;
  std::size_t row_width = 3;

  std::size_t page_size() const { return rows * row_width; }
  bool operator==(const UnlockLayout&) const = default;

  static UnlockLayout for_page(std::size_t page_size, std::size_t row_width) {
    if (row_width == 0 || page_size == 0 || page_size % row_width != 0) {
      throw ContractError("page size " + std::to_string(page_size) +
                          " is not a positive multiple of row width " +
                          std::to_string(row_width));
    }
    return UnlockLayout{page_size / row_width, row_width};
  }
};

struct FeedbackCheck {
  bool valid = true;
  std::string reason;

  explicit operator bool() const { return valid; }
};

inline FeedbackCheck validate_feedback(std::span<const std::uint8_t> feedback,
                                       UnlockLayout layout = {}) {
  if (feedback.size() != layout.page_size()) {
    throw ContractError("feedback has " + std::to_string(feedback.size()) +
                        " flags, expected " + std::to_string(layout.page_size()));
  }
  for (std::size_t i = 0; i < feedback.size(); ++i) {
    if (feedback[i] > 1) {
      return {false, "flag at position " + std::to_string(i) + " is not binary"};
    }
  }
  bool unlocked = true;
  for (std::size_t row = 0; row < layout.rows; ++row) {
    bool full = true;
    for (std::size_t c = 0; c < layout.row_width; ++c) {
      const std::size_t pos = row * layout.row_width + c;
      if (feedback[pos] != 0 && !unlocked) {
        return {false, "purchase at position " + std::to_string(pos) + " in row " +
                           std::to_string(row + 1) + " while an earlier row is not sold out"};
      }
      full = full && feedback[pos] != 0;
    }
    unlocked = unlocked && full;
  }
  return {};
}

/// True iff every item on the page is unlocked under this feedback, i.e. the
/// position's row follows only fully purchased rows.
inline bool position_unlocked(std::span<const std::uint8_t> feedback, std::size_t position,
                              UnlockLayout layout) {
  const std::size_t row = position / layout.row_width;
  for (std::size_t i = 0; i < row * layout.row_width; ++i) {
    if (feedback[i] == 0) return false;
  }
  return true;
}

namespace detail {

inline std::vector<Feedback> enumerate_valid_patterns(UnlockLayout layout) {
  const std::size_t n = layout.page_size();
  if (n > 20) throw SizeError("cannot enumerate patterns of a page larger than 20");
  std::vector<Feedback> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Feedback fb(n);
    for (std::size_t i = 0; i < n; ++i) fb[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
    if (validate_feedback(fb, layout)) out.push_back(std::move(fb));
  }
  return out;
}

}  // namespace detail

/// All unlock-valid patterns, ordered by the integer whose bit i is position
/// i. This order is the class index of the slate-wise distribution.
inline const std::vector<Feedback>& valid_patterns(UnlockLayout layout = {}) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, std::vector<Feedback>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(layout.rows, layout.row_width);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, detail::enumerate_valid_patterns(layout)).first;
  }
  return it->second;  // map nodes are stable, so the reference outlives the lock
}

inline std::size_t pattern_index(std::span<const std::uint8_t> feedback, UnlockLayout layout = {}) {
  const auto& patterns = valid_patterns(layout);
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    if (std::equal(patterns[k].begin(), patterns[k].end(), feedback.begin(), feedback.end())) {
      return k;
    }
  }
  throw ValidityError(Feedback(feedback.begin(), feedback.end()),
                      "feedback pattern violates the unlock rule");
}

}  // namespace slaterl
