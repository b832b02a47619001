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

// Trainable prompt module: image embedding -> (dense, sparse) prompt embedding.
//
//   x --1x1 conv--> ReLU --+--3x3 conv (same padding)--> ReLU --> dense
//                          |
//                          +--1x1 conv--> ReLU --> max pool --> FC --> sparse
//
// Max pooling partitions the grid into pool_grid x pool_grid cells
// (pool_grid = 1 is global max pooling).

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "boxprompt/embedding.hpp"
#include "boxprompt/tensor.hpp"

namespace boxprompt {

struct PromptModuleConfig {
  int in_channels = 0;
  int reduced_channels = 0;
  int dense_out_channels = 0;
  int sparse_channels = 0;
  int pool_grid = 1;
  int sparse_tokens = 2;
  int sparse_dim = 0;
  Shape grid;
  std::uint64_t init_seed = 0;

  void validate() const;
  /// Throws ShapeSpecMismatch unless outputs match what the backbone consumes.
  void validate_against(const BackboneShapeSpec& spec) const;

  /// Closed-form trainable parameter count.
  std::size_t expected_parameter_count() const;

  static PromptModuleConfig defaults_for(const BackboneShapeSpec& spec, std::uint64_t seed = 0);

  nlohmann::json to_json() const;
  static PromptModuleConfig from_json(const nlohmann::json& j);
  bool operator==(const PromptModuleConfig&) const = default;
};

/// Intermediates kept by forward() for the backward pass.
struct PromptTrace {
  std::vector<double> input;        // C x N
  std::vector<double> reduced_pre;  // R x N
  std::vector<double> reduced;      // R x N
  std::vector<double> dense_pre;    // D x N
  std::vector<double> sparse_pre;   // S x N
  std::vector<double> pooled;       // S x P*P
  std::vector<int> argmax;          // S x P*P, flat pixel index
};

class PromptModule {
 public:
  explicit PromptModule(const PromptModuleConfig& cfg);
  PromptModule(const PromptModuleConfig& cfg, ParameterSet params);

  const PromptModuleConfig& config() const { return cfg_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }
  std::size_t parameter_count() const { return params_.count(); }

  PromptEmbedding forward(const ImageEmbedding& emb, PromptTrace* trace = nullptr) const;

  /// Accumulates parameter gradients given output gradients.
  void backward(const PromptTrace& trace, const PromptEmbedding& grad_out, ParameterSet& grads) const;

 private:
  PromptModuleConfig cfg_;
  ParameterSet params_;
};

}  // namespace boxprompt
