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

// Resampling on 2-D grids. Bilinear uses the half-pixel-centre convention
// (source = (dst + 0.5) * in / out - 0.5, clamped at the borders), so an
// equal-size resize is the identity.

#pragma once

#include <vector>

#include "boxprompt/core.hpp"

namespace boxprompt {

/// Per-axis two-tap interpolation weights.
struct AxisTaps {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> w_hi;

  static AxisTaps bilinear(int in, int out);
};

template <typename T>
Grid<T> resize_bilinear(const Grid<T>& in, Shape out);

/// Transpose of resize_bilinear: maps an output-space gradient back to `in`.
Grid<double> resize_bilinear_adjoint(const Grid<double>& grad_out, Shape in);

template <typename T>
Grid<T> resize_nearest(const Grid<T>& in, Shape out);

extern template Grid<double> resize_bilinear(const Grid<double>&, Shape);
extern template Grid<float> resize_bilinear(const Grid<float>&, Shape);
extern template Grid<std::uint8_t> resize_nearest(const Grid<std::uint8_t>&, Shape);
extern template Grid<float> resize_nearest(const Grid<float>&, Shape);

}  // namespace boxprompt
