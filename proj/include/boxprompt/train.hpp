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

// Box-supervised training of the prompt module against a frozen backbone.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxprompt/constraints.hpp"
#include "boxprompt/eval.hpp"
#include "boxprompt/promptnet.hpp"
#include "boxprompt/provider.hpp"

namespace boxprompt {

struct TrainConfig {
  int batch_size = 4;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int epochs = 100;
  double lr_drop_factor = 0.1;
  double lr_drop_at = 0.5;
  /// Stop after this many epochs without a validation Dice improvement; 0 disables.
  int patience = 20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  LossWeights weights;
  SizePrior prior;
  PenaltyConfig penalty;
  int band_width = 5;
  double threshold = 0.5;

  std::uint64_t seed = 0;
  bool use_cache = true;

  void validate() const;
  nlohmann::json to_json() const;
};

/// lr before ceil(epochs * lr_drop_at), lr * lr_drop_factor from then on.
double lr_at(int epoch, const TrainConfig& cfg);

struct StepRecord {
  int epoch = 0;
  int step = 0;
  LossBreakdown loss;  // batch mean of per-sample sums
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;  // mean over the epoch's steps
  std::optional<double> val_dice;
};

struct RunRecord {
  nlohmann::json config;
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
  int best_epoch = -1;
  std::optional<double> best_val_dice;
  std::string checkpoint_path;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> subset_seed;
  std::vector<std::string> train_ids;
  std::string backbone_checksum;

  nlohmann::json to_json(bool include_timing = true) const;
};

struct TrainResult {
  RunRecord record;
  PromptModule best;
};

/// Extra provenance stored in the run record.
struct RunLabels {
  nlohmann::json config_echo;  // stored under config.pipeline when not null
  std::optional<std::uint64_t> subset_seed;
};

/// Optimises only the prompt-module parameters (AdamW, decoupled decay).
/// Selects the epoch with the best validation Dice when `val_set` is non-empty.
/// Writes config.json, metrics.jsonl, checkpoint_best.bin, checkpoint_last.bin
/// and run_record.json into `run_dir` when given.
TrainResult train(const TrainConfig& cfg, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  PromptModule& module, EmbeddingProvider& provider,
                  const std::optional<std::filesystem::path>& run_dir = std::nullopt, const RunLabels& labels = {});

struct ExperimentRun {
  std::uint64_t subset_seed = 0;
  std::uint64_t init_seed = 0;
  std::vector<std::string> subset_ids;
  RunRecord record;
  MetricsReport test;
};

struct ExperimentReport {
  std::vector<ExperimentRun> runs;
  RunAggregate aggregate;
  /// Mean of the per-sample std of each run, for the across-samples view.
  double mean_sample_std = 0.0;

  nlohmann::json to_json(bool include_timing = true) const;
};

struct ExperimentSpec {
  int k = 10;
  std::vector<std::uint64_t> subset_seeds{0, 1, 2};
  std::vector<std::uint64_t> init_seeds{0, 1, 2};
  /// Worker threads for independent runs; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Cartesian product of subset and init seeds; each run trains on k train
/// samples and is scored on the test split.
ExperimentReport repeated_experiment(const TrainConfig& base, std::span<const Sample> dataset,
                                     const ExperimentSpec& spec, const PromptModuleConfig& module_template,
                                     EmbeddingProvider& provider, const EvalOptions& eval_opts,
                                     const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                     const nlohmann::json& config_echo = nullptr);

}  // namespace boxprompt
