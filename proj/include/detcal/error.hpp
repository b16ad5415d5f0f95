/*
 * Copyright 2026 The detcal Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace detcal {

// Values double as process exit codes for the CLI.
enum class ErrorCategory : int {
  kValidation = 1,
  kIo = 2,
  kComputation = 3,
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorCategory::kValidation, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorCategory::kIo, message) {}
};

class ComputationError : public Error {
 public:
  explicit ComputationError(const std::string& message)
      : Error(ErrorCategory::kComputation, message) {}
};

// Raised when bin neglect leaves nothing to average over.
class NoRetainedSamplesError : public ComputationError {
 public:
  explicit NoRetainedSamplesError(const std::string& message)
      : ComputationError(message) {}
};

}  // namespace detcal
