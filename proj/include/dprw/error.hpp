// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
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

namespace dprw {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 1 and every other dprw::Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameters (budgets, sizes, flag combinations).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing dataset input. Carries the 1-based line number when
// the problem is attributable to a single line (0 otherwise).
class DataError : public Error {
 public:
  DataError(const std::string& path, std::size_t line, const std::string& what)
      : Error(format(path, line, what)), path_(path), line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  static std::string format(const std::string& path, std::size_t line,
                            const std::string& what) {
    std::string msg = path;
    if (line > 0) msg += ":" + std::to_string(line);
    return msg + ": " + what;
  }

  std::string path_;
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A computation produced NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  enum class Kind { kCorrupt, kVersion, kShape, kIo };

  CheckpointError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// API misuse that is not a configuration problem (e.g. backward() twice).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace dprw
