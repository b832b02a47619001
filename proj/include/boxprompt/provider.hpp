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

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>

#include "boxprompt/backbone.hpp"
#include "boxprompt/data.hpp"

namespace boxprompt {

/// Supplies frozen image embeddings for samples.
///
///  Memory    - encode once per sample id, then reuse (the default).
///  Disk      - read through an on-disk cache directory, encoding on a miss.
///  Recompute - encode on every request.
///
/// Thread-safe; the backbone is only ever used read-only.
class EmbeddingProvider {
 public:
  enum class Mode { Memory, Disk, Recompute };

  struct Stats {
    long hits = 0;
    long writes = 0;
    long encodes = 0;
  };

  EmbeddingProvider(const Backbone& backbone, double input_scale, Mode mode = Mode::Memory,
                    std::filesystem::path cache_dir = {});

  ImageEmbedding get(const Sample& sample);
  ModelInput model_input(const Sample& sample) const;

  const Backbone& backbone() const { return backbone_; }
  double input_scale() const { return input_scale_; }
  Stats stats() const;

 private:
  const Backbone& backbone_;
  double input_scale_;
  Mode mode_;
  std::filesystem::path cache_dir_;
  mutable std::mutex mu_;
  std::map<std::string, ImageEmbedding> memo_;
  Stats stats_;
};

}  // namespace boxprompt
