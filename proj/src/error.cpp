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

#include "boxprompt/error.hpp"

namespace boxprompt {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::BoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorKind::InvalidWidth: return "InvalidWidth";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ShapeSpecMismatch: return "ShapeSpecMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::WrongInputSize: return "WrongInputSize";
    case ErrorKind::BackboneUnavailable: return "BackboneUnavailable";
    case ErrorKind::IOFailure: return "IOFailure";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::CacheConflict: return "CacheConflict";
    case ErrorKind::CacheMiss: return "CacheMiss";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorKind::EpochOutOfRange: return "EpochOutOfRange";
    case ErrorKind::MissingMask: return "MissingMask";
    case ErrorKind::EmptyList: return "EmptyList";
    case ErrorKind::InternalInvariant: return "InternalInvariant";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidWidth:
    case ErrorKind::ShapeSpecMismatch:
    case ErrorKind::InvalidConfig:
    case ErrorKind::KTooLarge:
    case ErrorKind::EpochOutOfRange:
      return ErrorCategory::Config;
    case ErrorKind::BackboneUnavailable:
      return ErrorCategory::Backbone;
    case ErrorKind::InternalInvariant:
      return ErrorCategory::Internal;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace boxprompt
