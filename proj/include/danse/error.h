// include/danse/error.h

// Copyright 2026   DANSE authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DANSE_ERROR_H_
#define DANSE_ERROR_H_

#include <stdexcept>
#include <string>

namespace danse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent shapes or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in a state that does not support it.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or degenerate norms.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates an operation's preconditions (e.g. too short).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. `line` is 1-based, 0 when not line-oriented.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace danse

#endif  // DANSE_ERROR_H_
