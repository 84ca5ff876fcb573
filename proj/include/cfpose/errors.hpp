// Copyright 2026 The cfpose Authors.
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
#include <vector>

namespace cfpose {

// Base of every error raised by the library. Subclasses map onto the
// failure classes the CLI turns into exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A pre-normalization vector collapsed to (near) zero length, so the point
// has no direction for the current pose.
class DegenerateDirection : public Error {
 public:
  DegenerateDirection(const std::string& what, std::size_t index)
      : Error(what + " (point " + std::to_string(index) + ")"),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class ZeroSpread : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  NonFinite(const std::string& what, std::vector<double> last_good)
      : Error(what), last_good_(std::move(last_good)) {}
  const std::vector<double>& last_good() const { return last_good_; }

 private:
  std::vector<double> last_good_;
};

class NoConsensus : public Error {
 public:
  using Error::Error;
};

class EmptySegmentation : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

class CorruptFile : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration or point-set JSON.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfpose
