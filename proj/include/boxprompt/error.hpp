/*
 * boxprompt
 *
 * Copyright 2026 The boxprompt Authors
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

#include <stdexcept>
#include <string>

namespace boxprompt {

enum class ErrorKind {
  EmptyMask,
  BoxOutOfBounds,
  InvalidWidth,
  ShapeMismatch,
  ShapeSpecMismatch,
  InvalidConfig,
  WrongInputSize,
  BackboneUnavailable,
  IOFailure,
  FormatError,
  CacheConflict,
  CacheMiss,
  EmptyInput,
  KTooLarge,
  EmptyTrainSet,
  EpochOutOfRange,
  MissingMask,
  EmptyList,
  InternalInvariant,
};

/// Coarse grouping used for process exit codes and C API status values.
enum class ErrorCategory { Config = 2, Data = 3, Backbone = 4, Internal = 5 };

const char* to_string(ErrorKind kind);
ErrorCategory category_of(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace boxprompt
