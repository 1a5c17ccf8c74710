// Copyright 2026 The qnngp Authors
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
#include <stdexcept>
#include <string>

namespace qnngp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
  public:
    using Error::Error;
};

/// A validated type was handed data outside its tolerances.
class ContractViolation : public Error {
  public:
    using Error::Error;
};

class ResourceError : public Error {
  public:
    using Error::Error;
};

class ArityError : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

class SingularGram : public Error {
  public:
    using Error::Error;
};

class UnsupportedOrder : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Raised when a kernel block cannot be factorized.
class ConditioningError : public Error {
  public:
    ConditioningError(const std::string &what, double condition_number)
        : Error(what + " (condition number " + std::to_string(condition_number) + ")"),
          condition_number_(condition_number) {}
    [[nodiscard]] double condition_number() const noexcept { return condition_number_; }

  private:
    double condition_number_;
};

/// Malformed tabular input. Row and column are 1-based, 0 when not applicable.
class SchemaError : public Error {
  public:
    SchemaError(const std::string &what, std::size_t row = 0, std::size_t col = 0)
        : Error(row ? what + " at row " + std::to_string(row) + ", column " + std::to_string(col)
                    : what),
          row_(row), col_(col) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t col() const noexcept { return col_; }

  private:
    std::size_t row_;
    std::size_t col_;
};

} // namespace qnngp
