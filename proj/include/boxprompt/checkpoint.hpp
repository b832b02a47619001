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

// Prompt-module checkpoint file. Layout, integers little-endian:
//
//   "BPCK" | u32 version | u32 n + n bytes JSON config echo |
//   u32 array count | per array: u32 n + name, u32 ndims, u32 dims[ndims],
//   float32 values (row-major)

#pragma once

#include <filesystem>

#include <json.hpp>

#include "boxprompt/promptnet.hpp"

namespace boxprompt {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PromptModule module;
  /// Free-form metadata written alongside the config (backbone id, fingerprint, epoch).
  nlohmann::json meta;
};

void save_checkpoint(const std::filesystem::path& path, const PromptModule& module, const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace boxprompt
