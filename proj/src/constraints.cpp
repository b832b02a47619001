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

#include "boxprompt/constraints.hpp"

#include <algorithm>
#include <cmath>

namespace boxprompt {

namespace {

void require_same_shape(Shape a, Shape b, const char* what) {
  if (!(a == b)) {
    fail(ErrorKind::ShapeMismatch,
         std::string(what) + ": probability map " + to_string(a) + " vs " + to_string(b));
  }
}

void require_grad_shape(const Grid<double>* grad, Shape s) {
  if (grad != nullptr && !(grad->shape() == s)) {
    fail(ErrorKind::ShapeMismatch, "gradient buffer " + to_string(grad->shape()) + " vs " + to_string(s));
  }
}

}  // namespace

PenaltyKind penalty_kind_from_string(const std::string& name) {
  if (name == "relu" || name == "scaled_relu") return PenaltyKind::ScaledRelu;
  if (name == "logbarrier" || name == "pseudo_log_barrier") return PenaltyKind::PseudoLogBarrier;
  fail(ErrorKind::InvalidConfig, "unknown penalty '" + name + "' (expected relu or logbarrier)");
}

std::string to_string(PenaltyKind kind) {
  return kind == PenaltyKind::ScaledRelu ? "relu" : "logbarrier";
}

void PenaltyConfig::validate() const {
  if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::InvalidConfig, "penalty t must be > 0");
}

void SizePrior::validate() const {
  if (!(0.0 <= eps_lo && eps_lo <= eps_hi && eps_hi <= 1.0)) {
    fail(ErrorKind::InvalidConfig, "size prior needs 0 <= eps_lo <= eps_hi <= 1");
  }
}

void LossWeights::validate() const {
  if (!(lambda_tight >= 0.0) || !(lambda_size >= 0.0)) {
    fail(ErrorKind::InvalidConfig, "loss weights must be >= 0");
  }
}

double penalty(double z, const PenaltyConfig& cfg) {
  const double t = cfg.t;
  if (cfg.kind == PenaltyKind::ScaledRelu) return t * std::max(0.0, z);
  const double knee = -1.0 / (t * t);
  if (z <= knee) return -std::log(-z) / t;
  return t * z - std::log(1.0 / (t * t)) / t + 1.0 / t;
}

double penalty_derivative(double z, const PenaltyConfig& cfg) {
  const double t = cfg.t;
  if (cfg.kind == PenaltyKind::ScaledRelu) return z > 0.0 ? t : 0.0;
  const double knee = -1.0 / (t * t);
  if (z <= knee) return -1.0 / (t * z);
  return t;
}

double emptiness_loss(const ProbabilityMap& f, const RegionPartition& part, Grid<double>* grad, double scale) {
  require_same_shape(f.shape(), part.outside.shape(), "emptiness_loss");
  require_grad_shape(grad, f.shape());
  double loss = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (part.outside[i] == 0) continue;
    const double p = f[i];
    const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    loss -= std::log1p(-q);
    if (grad != nullptr && p >= kProbClamp && p <= 1.0 - kProbClamp) {
      (*grad)[i] += scale / (1.0 - q);
    }
  }
  return loss;
}

double tightness_loss(const ProbabilityMap& f, const SegmentSet& segs, const PenaltyConfig& cfg,
                      Grid<double>* grad, double scale) {
  require_grad_shape(grad, f.shape());
  double loss = 0.0;
  for (const auto& seg : segs.segments) {
    if (!seg.band.fits(f.shape())) {
      fail(ErrorKind::ShapeMismatch, "segment " + to_string(seg.band) + " outside grid " + to_string(f.shape()));
    }
    double mass = 0.0;
    for (int r = seg.band.rmin; r <= seg.band.rmax; ++r) {
      for (int c = seg.band.cmin; c <= seg.band.cmax; ++c) mass += f(r, c);
    }
    const double z = seg.threshold - mass;
    loss += penalty(z, cfg);
    if (grad != nullptr) {
      const double g = -scale * penalty_derivative(z, cfg);
      for (int r = seg.band.rmin; r <= seg.band.rmax; ++r) {
        for (int c = seg.band.cmin; c <= seg.band.cmax; ++c) (*grad)(r, c) += g;
      }
    }
  }
  return loss;
}

double size_loss(const ProbabilityMap& f, const RegionPartition& part, const SizePrior& prior,
                 const PenaltyConfig& cfg, Grid<double>* grad, double scale) {
  require_same_shape(f.shape(), part.inside.shape(), "size_loss");
  require_grad_shape(grad, f.shape());
  double mass = 0.0;
  for (double v : f.values()) mass += v;
  const double n_in = static_cast<double>(part.inside_count);
  const double z_lo = prior.eps_lo * n_in - mass;
  const double z_hi = mass - prior.eps_hi * n_in;
  if (grad != nullptr) {
    const double g = scale * (penalty_derivative(z_hi, cfg) - penalty_derivative(z_lo, cfg));
    for (double& v : grad->values()) v += g;
  }
  return penalty(z_lo, cfg) + penalty(z_hi, cfg);
}

LossBreakdown total_loss(const ProbabilityMap& f, const RegionPartition& part, const SegmentSet& segs,
                         const LossWeights& weights, const SizePrior& prior, const PenaltyConfig& cfg,
                         Grid<double>* grad, double scale) {
  LossBreakdown out;
  out.empty = emptiness_loss(f, part, grad, scale);
  out.tight = tightness_loss(f, segs, cfg, grad, scale * weights.lambda_tight);
  out.size = size_loss(f, part, prior, cfg, grad, scale * weights.lambda_size);
  out.total = out.empty + weights.lambda_tight * out.tight + weights.lambda_size * out.size;
  return out;
}

BoxConstraints make_box_constraints(const TightBox& box, Shape grid, int band_width) {
  return {partition_regions(box, grid), build_segments(box, band_width)};
}

}  // namespace boxprompt
