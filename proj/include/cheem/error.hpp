/*
 * Copyright 2026 The Cheem Explorer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHEEM_ERROR_HPP_
#define CHEEM_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace cheem {

// Input violates a documented contract (bad CSV, bad argument, bad index).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A projection request has no geometric solution (zero vector, basis
// already aligned with the manipulated axis, non-orthogonal direction).
class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Failure raised inside one pipeline stage, tagged with that stage's name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message,
             bool invalid_input = false)
      : std::runtime_error(stage + ": " + message),
        stage_(std::move(stage)),
        invalid_input_(invalid_input) {}

  const std::string& stage() const { return stage_; }
  // True when the stage rejected its input rather than failing internally.
  bool invalid_input() const { return invalid_input_; }

 private:
  std::string stage_;
  bool invalid_input_;
};

}  // namespace cheem

#endif  // CHEEM_ERROR_HPP_
