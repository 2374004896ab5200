// Copyright 2026 The beltcount Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace beltcount {

/// Malformed or inconsistent input: bad files, invalid boxes, bad config.
/// Carries the offending frame index and field name when known.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& message,
                      std::optional<std::int64_t> frame = std::nullopt,
                      std::string field = {})
      : std::runtime_error(message), frame_(frame), field_(std::move(field)) {}

  const std::optional<std::int64_t>& frame() const noexcept { return frame_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::optional<std::int64_t> frame_;
  std::string field_;
};

/// An internal invariant was found broken at runtime. Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A metric whose denominator is zero (e.g. AP with no annotations).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace beltcount
