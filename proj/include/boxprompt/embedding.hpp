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

// Embedding containers exchanged between the backbone and the prompt module.

#pragma once

#include <string>
#include <vector>

#include "boxprompt/core.hpp"

namespace boxprompt {

/// Tensor shapes a backbone produces and consumes.
struct BackboneShapeSpec {
  int embed_channels = 0;
  Shape embed_grid;
  int dense_prompt_channels = 0;
  Shape dense_prompt_grid;
  int token_dim = 0;
  Shape input_size;
  Shape decoder_output_grid;

  void validate() const;
  bool operator==(const BackboneShapeSpec&) const = default;

  static BackboneShapeSpec toy();
  static BackboneShapeSpec medsam_vit_b();
};

/// Frozen encoder output, stored as float32 so disk caching is bit-exact.
struct ImageEmbedding {
  int channels = 0;
  Shape grid;
  std::vector<float> values;  // channels x rows x cols
  std::string source_id;
  std::string fingerprint;

  bool operator==(const ImageEmbedding&) const = default;
};

/// Dense (channels x grid) and sparse (tokens x dim) prompt embeddings.
struct PromptEmbedding {
  int dense_channels = 0;
  Shape grid;
  std::vector<double> dense;
  int tokens = 0;
  int token_dim = 0;
  std::vector<double> sparse;

  static PromptEmbedding zeros(int dense_channels, Shape grid, int tokens, int token_dim);
  bool operator==(const PromptEmbedding&) const = default;
};

/// Three-channel model input, values in the backbone's input range.
struct ModelInput {
  Shape shape;
  std::vector<float> values;  // 3 x rows x cols
};

}  // namespace boxprompt
