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

#include "boxprompt/imageops.hpp"

#include <algorithm>
#include <cmath>

namespace boxprompt {

AxisTaps AxisTaps::bilinear(int in, int out) {
  AxisTaps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.w_hi.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.w_hi[i] = src - lo;
  }
  return t;
}

template <typename T>
Grid<T> resize_bilinear(const Grid<T>& in, Shape out) {
  if (in.shape() == out) return in;
  const AxisTaps rt = AxisTaps::bilinear(in.rows(), out.rows);
  const AxisTaps ct = AxisTaps::bilinear(in.cols(), out.cols);
  Grid<T> res(out);
  for (int r = 0; r < out.rows; ++r) {
    const double wr = rt.w_hi[r];
    for (int c = 0; c < out.cols; ++c) {
      const double wc = ct.w_hi[c];
      const double top = (1.0 - wc) * in(rt.lo[r], ct.lo[c]) + wc * in(rt.lo[r], ct.hi[c]);
      const double bot = (1.0 - wc) * in(rt.hi[r], ct.lo[c]) + wc * in(rt.hi[r], ct.hi[c]);
      res(r, c) = static_cast<T>((1.0 - wr) * top + wr * bot);
    }
  }
  return res;
}

Grid<double> resize_bilinear_adjoint(const Grid<double>& g, Shape in) {
  if (g.shape() == in) return g;
  const AxisTaps rt = AxisTaps::bilinear(in.rows, g.rows());
  const AxisTaps ct = AxisTaps::bilinear(in.cols, g.cols());
  Grid<double> res(in, 0.0);
  for (int r = 0; r < g.rows(); ++r) {
    const double wr = rt.w_hi[r];
    for (int c = 0; c < g.cols(); ++c) {
      const double wc = ct.w_hi[c];
      const double v = g(r, c);
      res(rt.lo[r], ct.lo[c]) += (1.0 - wr) * (1.0 - wc) * v;
      res(rt.lo[r], ct.hi[c]) += (1.0 - wr) * wc * v;
      res(rt.hi[r], ct.lo[c]) += wr * (1.0 - wc) * v;
      res(rt.hi[r], ct.hi[c]) += wr * wc * v;
    }
  }
  return res;
}

template <typename T>
Grid<T> resize_nearest(const Grid<T>& in, Shape out) {
  if (in.shape() == out) return in;
  Grid<T> res(out);
  for (int r = 0; r < out.rows; ++r) {
    const int sr = std::min(in.rows() - 1, static_cast<int>(std::floor((r + 0.5) * in.rows() / out.rows)));
    for (int c = 0; c < out.cols; ++c) {
      const int sc = std::min(in.cols() - 1, static_cast<int>(std::floor((c + 0.5) * in.cols() / out.cols)));
      res(r, c) = in(sr, sc);
    }
  }
  return res;
}

template Grid<double> resize_bilinear(const Grid<double>&, Shape);
template Grid<float> resize_bilinear(const Grid<float>&, Shape);
template Grid<std::uint8_t> resize_nearest(const Grid<std::uint8_t>&, Shape);
template Grid<float> resize_nearest(const Grid<float>&, Shape);

}  // namespace boxprompt
