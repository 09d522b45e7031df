/*
 * Copyright 2026 The Lucon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace lucon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourceLocation {
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Malformed input text. The location points inside the offending token.
class SyntaxError : public Error {
 public:
  SyntaxError(std::string message, SourceLocation location)
      : Error(std::to_string(location.line) + ":" +
              std::to_string(location.column) + ": " + message),
        message_(std::move(message)),
        location_(location) {}

  const std::string& message() const noexcept { return message_; }
  SourceLocation location() const noexcept { return location_; }
  std::size_t line() const noexcept { return location_.line; }
  std::size_t column() const noexcept { return location_.column; }

 private:
  std::string message_;
  SourceLocation location_;
};

/// Well-formed input that violates a structural or semantic invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace lucon
