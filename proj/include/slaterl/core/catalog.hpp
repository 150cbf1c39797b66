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
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slaterl/core/error.hpp"
#include "slaterl/core/text.hpp"

namespace slaterl {

using ItemId = std::int32_t;
inline constexpr ItemId kNoItem = -1;

struct Item {
  ItemId id = kNoItem;
  double utility = 0.0;
  std::vector<double> features;

  bool operator==(const Item&) const = default;
};

/// Immutable item table. Items keep the order they were given in; that order
/// defines the dense index used by models (one-hot slots, transition tables).
class Catalog {
 public:
  Catalog() = default;

  explicit Catalog(std::vector<Item> items) : items_(std::move(items)) {
    if (!items_.empty()) feature_dim_ = items_.front().features.size();
    for (std::size_t i = 0; i < items_.size(); ++i) {
      const Item& item = items_[i];
      if (item.id < 0) throw CatalogError("item ids must be non-negative");
      if (item.features.size() != feature_dim_) {
        throw CatalogError("item " + std::to_string(item.id) +
                           " has inconsistent feature dimension");
      }
      if (!index_.emplace(item.id, i).second) {
        throw CatalogError("duplicate item id " + std::to_string(item.id));
      }
      max_utility_ = std::max(max_utility_, std::abs(item.utility));
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  const std::vector<Item>& items() const { return items_; }
  bool contains(ItemId id) const { return index_.count(id) != 0; }

  /// Largest absolute utility; 1 for an all-zero catalog so it can scale.
  double utility_scale() const { return max_utility_ > 0.0 ? max_utility_ : 1.0; }

  std::size_t index_of(ItemId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw CatalogError("unknown item id " + std::to_string(id));
    return it->second;
  }

  const Item& at(ItemId id) const { return items_[index_of(id)]; }
  double utility(ItemId id) const { return at(id).utility; }

  std::vector<ItemId> ids() const {
    std::vector<ItemId> out;
    out.reserve(items_.size());
    for (const Item& item : items_) out.push_back(item.id);
    return out;
  }

  bool operator==(const Catalog& other) const { return items_ == other.items_; }

 private:
  std::vector<Item> items_;
  std::unordered_map<ItemId, std::size_t> index_;
  std::size_t feature_dim_ = 0;
  double max_utility_ = 0.0;
};

// Catalog file: tab separated with a header "item_id\tutility\tfeatures";
// features are space separated.
inline void write_catalog(std::ostream& out, const Catalog& catalog) {
  out << "item_id\tutility\tfeatures\n";
  for (const Item& item : catalog.items()) {
    out << item.id << '\t' << text::format_double(item.utility) << '\t'
        << text::join_doubles(item.features) << '\n';
  }
}

inline Catalog read_catalog(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty catalog file");
  ++line_no;
  if (text::trim(line) != "item_id\tutility\tfeatures") {
    throw ParseError(line_no, "unexpected catalog header");
  }
  std::vector<Item> items;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
    Item item;
    auto id = text::parse_int<ItemId>(text::trim(fields[0]));
    auto utility = text::parse_double(text::trim(fields[1]));
    if (!id || !utility) throw ParseError(line_no, "non-numeric id or utility");
    item.id = *id;
    item.utility = *utility;
    for (auto tok : text::tokens(fields[2])) {
      auto v = text::parse_double(tok);
      if (!v) throw ParseError(line_no, "non-numeric feature");
      item.features.push_back(*v);
    }
    items.push_back(std::move(item));
  }
  return Catalog(std::move(items));
}

}  // namespace slaterl
