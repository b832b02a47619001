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

// Weak-supervision losses driven by a tight bounding box.
//
// All losses are plain sums over pixels or segments (no normalization), so
// the loss weights keep their per-sample meaning. Each loss optionally
// accumulates `scale * dL/df` into a gradient grid of the same shape as f.

#pragma once

#include <string>

#include "boxprompt/core.hpp"

namespace boxprompt {

enum class PenaltyKind { ScaledRelu, PseudoLogBarrier };

PenaltyKind penalty_kind_from_string(const std::string& name);
std::string to_string(PenaltyKind kind);

struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::PseudoLogBarrier;
  double t = 5.0;

  void validate() const;
};

struct SizePrior {
  double eps_lo = 0.5;
  double eps_hi = 0.9;

  void validate() const;
};

struct LossWeights {
  double lambda_tight = 1e-4;
  double lambda_size = 1e-2;

  void validate() const;
};

struct LossBreakdown {
  double empty = 0.0;
  double tight = 0.0;
  double size = 0.0;
  double total = 0.0;
};

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

/// psi_t(z). For the pseudo log-barrier: -(1/t) ln(-z) when z <= -1/t^2,
/// otherwise the C1 linear extension t z - (1/t) ln(1/t^2) + 1/t.
double penalty(double z, const PenaltyConfig& cfg);
double penalty_derivative(double z, const PenaltyConfig& cfg);

double emptiness_loss(const ProbabilityMap& f, const RegionPartition& part,
                      Grid<double>* grad = nullptr, double scale = 1.0);

double tightness_loss(const ProbabilityMap& f, const SegmentSet& segs, const PenaltyConfig& cfg,
                      Grid<double>* grad = nullptr, double scale = 1.0);

/// Probability mass is summed over the whole grid; bounds are eps * |inside|.
double size_loss(const ProbabilityMap& f, const RegionPartition& part, const SizePrior& prior,
                 const PenaltyConfig& cfg, Grid<double>* grad = nullptr, double scale = 1.0);

LossBreakdown total_loss(const ProbabilityMap& f, const RegionPartition& part, const SegmentSet& segs,
                         const LossWeights& weights, const SizePrior& prior, const PenaltyConfig& cfg,
                         Grid<double>* grad = nullptr, double scale = 1.0);

/// Partition and segments of one box on one grid, precomputed once per sample.
struct BoxConstraints {
  RegionPartition partition;
  SegmentSet segments;
};

BoxConstraints make_box_constraints(const TightBox& box, Shape grid, int band_width);

}  // namespace boxprompt
