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

// Binarization, Dice scoring, and per-dataset / per-run aggregation.

#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxprompt/promptnet.hpp"
#include "boxprompt/provider.hpp"

namespace boxprompt {

/// Pixel is foreground iff f >= threshold.
Mask binarize(const ProbabilityMap& f, double threshold = 0.5);

/// 2|a & b| / (|a| + |b|); 1.0 when both masks are empty.
double dice(const Mask& a, const Mask& b);

struct SampleScore {
  std::string id;
  double dice = 0.0;
};

struct MetricsReport {
  std::vector<SampleScore> per_sample;
  double mean = 0.0;
  double std = 0.0;  // population std across samples
  int n = 0;
  std::string config_fingerprint;

  static MetricsReport from_scores(std::vector<SampleScore> scores, std::string fingerprint);
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

enum class EvalResolution { Original, ModelInput };

struct EvalOptions {
  double threshold = 0.5;
  EvalResolution resolution = EvalResolution::Original;
  std::string config_fingerprint;
};

/// Probability map of the learned-prompt pipeline on the model input grid.
ProbabilityMap predict(const PromptModule& module, const Backbone& backbone, const ImageEmbedding& emb);

MetricsReport evaluate(const PromptModule& module, std::span<const Sample> test, EmbeddingProvider& provider,
                       const EvalOptions& opts = {});

/// Same Dice pipeline, prompted by each sample's tight box through the
/// backbone's native box encoder.
MetricsReport evaluate_prompted_baseline(std::span<const Sample> test, EmbeddingProvider& provider,
                                         const EvalOptions& opts = {});

struct RunAggregate {
  double mean = 0.0;
  double std = 0.0;  // population std of the run means
  int runs = 0;
};

/// Order-independent: run means are sorted before summation.
RunAggregate aggregate_runs(std::span<const MetricsReport> reports);

}  // namespace boxprompt
