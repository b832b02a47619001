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

#include "boxprompt/core.hpp"

#include <algorithm>
#include <cmath>

namespace boxprompt {

std::string to_string(Shape s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

std::string to_string(const TightBox& box) {
  return "(" + std::to_string(box.rmin) + "," + std::to_string(box.cmin) + "," +
         std::to_string(box.rmax) + "," + std::to_string(box.cmax) + ")";
}

void validate_probability_map(const ProbabilityMap& f) {
  for (double v : f.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      fail(ErrorKind::FormatError, "probability map value outside [0,1]");
    }
  }
}

void ImageSample::validate() const {
  if (shape.rows < 1 || shape.cols < 1) fail(ErrorKind::EmptyInput, "image '" + id + "' has an empty grid");
  if (channels != 1 && channels != 3) fail(ErrorKind::FormatError, "image '" + id + "' must have 1 or 3 channels");
  if (pixels.size() != shape.size() * static_cast<std::size_t>(channels)) {
    fail(ErrorKind::ShapeMismatch, "image '" + id + "' pixel count does not match its shape");
  }
  for (float v : pixels) {
    if (!std::isfinite(v)) fail(ErrorKind::FormatError, "image '" + id + "' has non-finite pixels");
  }
}

long foreground_count(const Mask& mask) {
  long n = 0;
  for (auto v : mask.values()) n += v != 0;
  return n;
}

TightBox tight_box_from_mask(const Mask& mask) {
  TightBox box{mask.rows(), mask.cols(), -1, -1};
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (mask(r, c) == 0) continue;
      box.rmin = std::min(box.rmin, r);
      box.cmin = std::min(box.cmin, c);
      box.rmax = std::max(box.rmax, r);
      box.cmax = std::max(box.cmax, c);
    }
  }
  if (box.rmax < 0) fail(ErrorKind::EmptyMask, "mask has no foreground pixel");
  return box;
}

RegionPartition partition_regions(const TightBox& box, Shape shape) {
  if (!box.fits(shape)) {
    fail(ErrorKind::BoxOutOfBounds, "box " + to_string(box) + " does not fit grid " + to_string(shape));
  }
  RegionPartition part{Mask(shape, 0), Mask(shape, 1), box.area()};
  for (int r = box.rmin; r <= box.rmax; ++r) {
    for (int c = box.cmin; c <= box.cmax; ++c) {
      part.inside(r, c) = 1;
      part.outside(r, c) = 0;
    }
  }
  return part;
}

SegmentSet build_segments(const TightBox& box, int w) {
  if (w < 1) fail(ErrorKind::InvalidWidth, "segment width must be >= 1, got " + std::to_string(w));
  if (box.rmin > box.rmax || box.cmin > box.cmax) {
    fail(ErrorKind::BoxOutOfBounds, "box " + to_string(box) + " is inverted");
  }
  SegmentSet set;
  set.band_width = w;
  for (int r = box.rmin; r <= box.rmax; r += w) {
    const int r_end = std::min(r + w - 1, box.rmax);
    set.segments.push_back({TightBox{r, box.cmin, r_end, box.cmax},
                            static_cast<double>(r_end - r + 1), Orientation::Horizontal});
  }
  for (int c = box.cmin; c <= box.cmax; c += w) {
    const int c_end = std::min(c + w - 1, box.cmax);
    set.segments.push_back({TightBox{box.rmin, c, box.rmax, c_end},
                            static_cast<double>(c_end - c + 1), Orientation::Vertical});
  }
  return set;
}

TightBox map_box_to_grid(const TightBox& box, Shape from, Shape to) {
  if (from.rows < 1 || from.cols < 1 || to.rows < 1 || to.cols < 1) {
    fail(ErrorKind::ShapeMismatch, "map_box_to_grid needs positive shapes");
  }
  // The box covers the half-open continuous span [min, max + 1) on each axis.
  auto lower = [](long v, long num, long den) { return (v * num) / den; };
  auto upper = [](long v, long num, long den) { return (v * num + den - 1) / den; };
  TightBox out;
  out.rmin = static_cast<int>(lower(box.rmin, to.rows, from.rows));
  out.cmin = static_cast<int>(lower(box.cmin, to.cols, from.cols));
  out.rmax = static_cast<int>(upper(box.rmax + 1L, to.rows, from.rows)) - 1;
  out.cmax = static_cast<int>(upper(box.cmax + 1L, to.cols, from.cols)) - 1;
  out.rmin = std::clamp(out.rmin, 0, to.rows - 1);
  out.cmin = std::clamp(out.cmin, 0, to.cols - 1);
  out.rmax = std::clamp(out.rmax, out.rmin, to.rows - 1);
  out.cmax = std::clamp(out.cmax, out.cmin, to.cols - 1);
  return out;
}

}  // namespace boxprompt
