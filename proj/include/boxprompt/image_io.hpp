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

// Grayscale PNG (8/16-bit) and NIfTI-1 (.nii / .nii.gz) reading and writing.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "boxprompt/core.hpp"

namespace boxprompt {

/// Reads a PNG as single-channel float. Colour images are converted to gray.
Grid<float> read_png(const std::filesystem::path& path, int* bit_depth = nullptr);
void write_png8(const std::filesystem::path& path, const Grid<std::uint8_t>& image);
void write_png16(const std::filesystem::path& path, const Grid<std::uint16_t>& image);

Mask read_mask_png(const std::filesystem::path& path);
/// Writes 0 / 255 so masks are viewable.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

struct Volume {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm along x, y, z
  std::vector<float> data;                      // x fastest

  /// Slice z as a (ny rows x nx cols) grid.
  Grid<float> slice(int z) const;
};

Volume read_nifti(const std::filesystem::path& path);
/// Uncompressed float32 NIfTI-1 single file.
void write_nifti(const std::filesystem::path& path, const Volume& vol);

/// PNG or NIfTI (first slice of a volume with nz == 1) as a 2-D image.
Grid<float> read_image_2d(const std::filesystem::path& path);

bool is_nifti_path(const std::filesystem::path& path);

}  // namespace boxprompt
