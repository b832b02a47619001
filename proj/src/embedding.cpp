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

#include "boxprompt/embedding.hpp"

namespace boxprompt {

void BackboneShapeSpec::validate() const {
  const bool positive = embed_channels > 0 && embed_grid.rows > 0 && embed_grid.cols > 0 &&
                        dense_prompt_channels > 0 && dense_prompt_grid.rows > 0 &&
                        dense_prompt_grid.cols > 0 && token_dim > 0 && input_size.rows > 0 &&
                        input_size.cols > 0 && decoder_output_grid.rows > 0 && decoder_output_grid.cols > 0;
  if (!positive) fail(ErrorKind::ShapeSpecMismatch, "backbone shape spec has non-positive dimensions");
  if (!(dense_prompt_grid == embed_grid)) {
    fail(ErrorKind::ShapeSpecMismatch, "dense prompt grid must equal the image embedding grid");
  }
}

BackboneShapeSpec BackboneShapeSpec::toy() {
  return {16, {32, 32}, 8, {32, 32}, 8, {64, 64}, {64, 64}};
}

BackboneShapeSpec BackboneShapeSpec::medsam_vit_b() {
  return {256, {64, 64}, 256, {64, 64}, 256, {1024, 1024}, {256, 256}};
}

PromptEmbedding PromptEmbedding::zeros(int dense_channels, Shape grid, int tokens, int token_dim) {
  PromptEmbedding p;
  p.dense_channels = dense_channels;
  p.grid = grid;
  p.dense.assign(static_cast<std::size_t>(dense_channels) * grid.size(), 0.0);
  p.tokens = tokens;
  p.token_dim = token_dim;
  p.sparse.assign(static_cast<std::size_t>(tokens) * static_cast<std::size_t>(token_dim), 0.0);
  return p;
}

}  // namespace boxprompt
