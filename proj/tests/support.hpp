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

// Shared fixtures for the training and end-to-end tests.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "boxprompt/data.hpp"

namespace support {

/// Synthetic ellipses with intensities already normalized to [0, 255],
/// split train / val / test in that order.
inline std::vector<boxprompt::Sample> synthetic_set(int n_train, int n_val, int n_test, std::uint64_t seed) {
  using namespace boxprompt;
  std::vector<Sample> xs = generate_synthetic(n_train + n_val + n_test, seed, {64, 64});
  const PreprocessConfig pc;
  for (int i = 0; i < static_cast<int>(xs.size()); ++i) {
    xs[i].image = preprocess_intensity(xs[i].image, pc);
    xs[i].split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
  }
  return xs;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace support
