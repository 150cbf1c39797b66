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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slaterl {

enum class ErrorKind {
  parse,
  schema,
  validity,
  contract,
  integrity,
  catalog,
  config,
  divergence,
  propensity,
  undefined,
  invalid_action,
  size,
  empty_data,
  io,
  protocol,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::validity: return "validity";
    case ErrorKind::contract: return "contract";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::catalog: return "catalog";
    case ErrorKind::config: return "config";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::propensity: return "propensity";
    case ErrorKind::undefined: return "undefined";
    case ErrorKind::invalid_action: return "invalid_action";
    case ErrorKind::size: return "size";
    case ErrorKind::empty_data: return "empty_data";
    case ErrorKind::io: return "io";
    case ErrorKind::protocol: return "protocol";
  }
  return "unknown";
}

/// Base of every error thrown by the library. The kind is stable and is what
/// the CLI reports in its machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindError : public Error {
 public:
  explicit KindError(const std::string& message) : Error(K, message) {}
};

using SchemaError = KindError<ErrorKind::schema>;
using ContractError = KindError<ErrorKind::contract>;
using IntegrityError = KindError<ErrorKind::integrity>;
using CatalogError = KindError<ErrorKind::catalog>;
using ConfigError = KindError<ErrorKind::config>;
using PropensityError = KindError<ErrorKind::propensity>;
using UndefinedError = KindError<ErrorKind::undefined>;
using InvalidActionError = KindError<ErrorKind::invalid_action>;
using SizeError = KindError<ErrorKind::size>;
using EmptyDataError = KindError<ErrorKind::empty_data>;
using IoError = KindError<ErrorKind::io>;
using ProtocolError = KindError<ErrorKind::protocol>;

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidityError : public Error {
 public:
  ValidityError(std::vector<std::uint8_t> pattern, const std::string& message)
      : Error(ErrorKind::validity, message), pattern_(std::move(pattern)) {}

  const std::vector<std::uint8_t>& pattern() const noexcept { return pattern_; }

 private:
  std::vector<std::uint8_t> pattern_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& message)
      : Error(ErrorKind::divergence,
              message + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace slaterl
