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

// Independent reference implementations used only by the tests: naive
// per-pixel loss sums, the barrier in its textbook form, central finite
// differences and small random generators. Nothing here calls the library's
// loss code.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "boxprompt/core.hpp"
#include "boxprompt/random.hpp"

namespace oracle {

using boxprompt::Grid;
using boxprompt::ProbabilityMap;
using boxprompt::Rng;
using boxprompt::Shape;
using boxprompt::TightBox;

inline constexpr double kDelta = 1e-7;

inline double clampf(double p) { return std::min(std::max(p, kDelta), 1.0 - kDelta); }

inline double relu_penalty(double z, double t) { return z > 0.0 ? t * z : 0.0; }

inline double barrier(double z, double t) {
  const double knee = -1.0 / (t * t);
  if (z <= knee) return -std::log(-z) / t;
  return t * z - std::log(1.0 / (t * t)) / t + 1.0 / t;
}

inline double psi(double z, double t, bool log_barrier) { return log_barrier ? barrier(z, t) : relu_penalty(z, t); }

inline bool inside(const TightBox& b, int r, int c) {
  return r >= b.rmin && r <= b.rmax && c >= b.cmin && c <= b.cmax;
}

inline double emptiness(const ProbabilityMap& f, const TightBox& b) {
  double s = 0.0;
  for (int r = 0; r < f.rows(); ++r) {
    for (int c = 0; c < f.cols(); ++c) {
      if (!inside(b, r, c)) s -= std::log(1.0 - clampf(f(r, c)));
    }
  }
  return s;
}

struct Band {
  int r0, r1, c0, c1;
  double threshold;
};

/// Rows grouped top-down and columns left-right in steps of w, last group short.
inline std::vector<Band> bands(const TightBox& b, int w) {
  std::vector<Band> out;
  for (int r = b.rmin; r <= b.rmax; r += w) {
    const int r1 = std::min(r + w - 1, b.rmax);
    out.push_back({r, r1, b.cmin, b.cmax, static_cast<double>(r1 - r + 1)});
  }
  for (int c = b.cmin; c <= b.cmax; c += w) {
    const int c1 = std::min(c + w - 1, b.cmax);
    out.push_back({b.rmin, b.rmax, c, c1, static_cast<double>(c1 - c + 1)});
  }
  return out;
}

inline double band_mass(const ProbabilityMap& f, const Band& s) {
  double m = 0.0;
  for (int r = s.r0; r <= s.r1; ++r) {
    for (int c = s.c0; c <= s.c1; ++c) m += f(r, c);
  }
  return m;
}

inline double tightness(const ProbabilityMap& f, const TightBox& b, int w, double t, bool log_barrier) {
  double s = 0.0;
  for (const Band& band : bands(b, w)) s += psi(band.threshold - band_mass(f, band), t, log_barrier);
  return s;
}

inline double total_mass(const ProbabilityMap& f) {
  double m = 0.0;
  for (int r = 0; r < f.rows(); ++r) {
    for (int c = 0; c < f.cols(); ++c) m += f(r, c);
  }
  return m;
}

inline double size(const ProbabilityMap& f, const TightBox& b, double eps_lo, double eps_hi, double t,
                   bool log_barrier) {
  const double area = static_cast<double>(b.rmax - b.rmin + 1) * (b.cmax - b.cmin + 1);
  const double m = total_mass(f);
  return psi(eps_lo * area - m, t, log_barrier) + psi(m - eps_hi * area, t, log_barrier);
}

/// Which side of every non-smooth point the losses sit on; two maps with the
/// same signature are joined by a smooth path for the purposes of a
/// finite-difference check.
inline std::vector<int> regime(const ProbabilityMap& f, const TightBox& b, int w, double t, double eps_lo,
                               double eps_hi, bool log_barrier) {
  const double knee = log_barrier ? -1.0 / (t * t) : 0.0;
  std::vector<int> sig;
  for (double v : f.values()) sig.push_back(v < kDelta ? -1 : (v > 1.0 - kDelta ? 1 : 0));
  for (const Band& band : bands(b, w)) sig.push_back(band.threshold - band_mass(f, band) > knee);
  const double area = static_cast<double>(b.rmax - b.rmin + 1) * (b.cmax - b.cmin + 1);
  const double m = total_mass(f);
  sig.push_back(eps_lo * area - m > knee);
  sig.push_back(m - eps_hi * area > knee);
  return sig;
}

inline double central_difference(const std::function<double(double)>& g, double x, double h) {
  return (g(x + h) - g(x - h)) / (2.0 * h);
}

/// |a - b| relative to max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-2) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Shape random_shape(Rng& rng, int max_side) {
  return {1 + static_cast<int>(rng.below(max_side)), 1 + static_cast<int>(rng.below(max_side))};
}

inline TightBox random_box(Rng& rng, Shape s) {
  int r0 = static_cast<int>(rng.below(s.rows)), r1 = static_cast<int>(rng.below(s.rows));
  int c0 = static_cast<int>(rng.below(s.cols)), c1 = static_cast<int>(rng.below(s.cols));
  if (r0 > r1) std::swap(r0, r1);
  if (c0 > c1) std::swap(c0, c1);
  return {r0, c0, r1, c1};
}

inline ProbabilityMap random_map(Rng& rng, Shape s, double lo = 0.0, double hi = 1.0) {
  ProbabilityMap f(s);
  for (double& v : f.values()) v = rng.uniform(lo, hi);
  return f;
}

inline boxprompt::Mask random_mask(Rng& rng, Shape s, double density) {
  boxprompt::Mask m(s, 0);
  for (auto& v : m.values()) v = rng.uniform() < density ? 1 : 0;
  return m;
}

}  // namespace oracle
