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

// Geometric primitives shared by every stage of the pipeline.
//
// Coordinates are (row, col), origin top-left, row-major storage. Boxes use
// inclusive integer bounds so that the tightest box of a mask is unique.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boxprompt/error.hpp"

namespace boxprompt {

struct Shape {
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

/// Dense row-major 2-D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}
  Grid(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      fail(ErrorKind::ShapeMismatch, "grid data size does not match " + to_string(shape_));
    }
  }

  Shape shape() const { return shape_; }
  int rows() const { return shape_.rows; }
  int cols() const { return shape_.cols; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[index(r, c)]; }
  const T& operator()(int r, int c) const { return data_[index(r, c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(shape_.cols) + static_cast<std::size_t>(c);
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

/// Binary mask, values in {0,1}.
using Mask = Grid<std::uint8_t>;

/// Per-pixel foreground probability; every value lies in [0,1].
using ProbabilityMap = Grid<double>;

void validate_probability_map(const ProbabilityMap& f);

struct ImageSample {
  std::string id;
  int channels = 1;
  Shape shape;
  std::vector<float> pixels;  // channels x rows x cols

  void validate() const;
};

struct TightBox {
  int rmin = 0;
  int cmin = 0;
  int rmax = 0;
  int cmax = 0;

  int rows() const { return rmax - rmin + 1; }
  int cols() const { return cmax - cmin + 1; }
  long area() const { return static_cast<long>(rows()) * cols(); }
  bool contains(int r, int c) const { return r >= rmin && r <= rmax && c >= cmin && c <= cmax; }
  bool fits(Shape s) const {
    return rmin >= 0 && cmin >= 0 && rmin <= rmax && cmin <= cmax && rmax < s.rows && cmax < s.cols;
  }
  bool operator==(const TightBox&) const = default;
};

std::string to_string(const TightBox& box);

struct RegionPartition {
  Mask inside;
  Mask outside;
  long inside_count = 0;
};

enum class Orientation { Horizontal, Vertical };

/// One band of the tightness prior: a sub-rectangle of the box that must
/// carry at least `threshold` units of probability mass.
struct Segment {
  TightBox band;
  double threshold = 0.0;
  Orientation orientation = Orientation::Horizontal;
};

struct SegmentSet {
  std::vector<Segment> segments;
  int band_width = 0;
};

/// Minimal axis-aligned box enclosing every foreground pixel. Throws EmptyMask.
TightBox tight_box_from_mask(const Mask& mask);

long foreground_count(const Mask& mask);

/// Inside/outside indicators of `box` on a grid of `shape`. Throws BoxOutOfBounds.
RegionPartition partition_regions(const TightBox& box, Shape shape);

/// Non-overlapping width-`w` horizontal and vertical bands covering the box.
/// A trailing band narrower than `w` keeps its true width as threshold.
SegmentSet build_segments(const TightBox& box, int w);

/// Rescales a box between grids, rounding outward so no covered area is lost.
TightBox map_box_to_grid(const TightBox& box, Shape from, Shape to);

}  // namespace boxprompt
