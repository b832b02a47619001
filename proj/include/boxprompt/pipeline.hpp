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

// Flat run configuration and the pipeline commands behind the CLI.
//
// Every configuration key mirrors one module field; unknown keys are
// rejected. Commands write their outputs under `out` and return a JSON
// summary.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxprompt/data.hpp"
#include "boxprompt/eval.hpp"
#include "boxprompt/train.hpp"

namespace boxprompt {

struct PipelineConfig {
  std::string backbone = "toy";
  std::string backbone_weights;
  std::string cache;  // embedding cache directory; empty keeps embeddings in memory
  std::string manifest;
  std::string out = "out";
  std::string checkpoint;
  std::string image;

  PreprocessConfig preprocess;
  long min_foreground = 100;

  std::optional<int> k;
  std::uint64_t subset_seed = 0;
  TrainConfig train;
  EvalResolution eval_resolution = EvalResolution::Original;
  std::string eval_split = "test";
  bool prompted_baseline = false;

  // Prompt-module overrides; 0 keeps the backbone-derived default.
  int reduced_channels = 0;
  int sparse_channels = 0;
  int pool_grid = 0;
  int sparse_tokens = 0;

  int n = 60;
  int canvas = 64;
  double val_fraction = 0.2;
  double test_fraction = 0.3;
  double noise_std = 8.0;

  std::vector<std::uint64_t> subset_seeds{0, 1, 2};
  std::vector<std::uint64_t> init_seeds{0, 1, 2};
  unsigned threads = 0;

  void validate() const;
};

/// Applies `j` on top of `base`. Throws InvalidConfig on unknown keys or bad types.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::json config_to_json(const PipelineConfig& cfg);
/// Short stable hash of the effective configuration.
std::string config_fingerprint(const PipelineConfig& cfg);

PromptModuleConfig module_config_for(const PipelineConfig& cfg, const BackboneShapeSpec& spec);

nlohmann::json cmd_synth(const PipelineConfig& cfg);
nlohmann::json cmd_preprocess(const PipelineConfig& cfg);
nlohmann::json cmd_cache_embeddings(const PipelineConfig& cfg);
nlohmann::json cmd_train(const PipelineConfig& cfg);
nlohmann::json cmd_evaluate(const PipelineConfig& cfg);
nlohmann::json cmd_predict(const PipelineConfig& cfg);
nlohmann::json cmd_experiment(const PipelineConfig& cfg);

}  // namespace boxprompt
