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

// Dataset ingestion, intensity/spatial preprocessing, weak labels, few-shot
// subsets, and a synthetic ellipse dataset.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxprompt/core.hpp"
#include "boxprompt/embedding.hpp"

namespace boxprompt {

enum class Split { Train, Val, Test };

Split split_from_string(const std::string& s);
std::string to_string(Split s);

struct ManifestEntry {
  std::string id;
  std::string image_path;
  std::optional<std::string> mask_path;
  std::optional<TightBox> box;
  Split split = Split::Train;
  std::optional<std::array<double, 2>> spacing;  // mm per (row, col)
};

/// One JSON object per line. Relative paths resolve against the manifest's directory.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  void validate() const;
  DatasetManifest split(Split s) const;
};

nlohmann::json to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const nlohmann::json& j);
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct PreprocessConfig {
  double clip_lo_pct = 0.5;
  double clip_hi_pct = 99.5;
  double rescale_max = 255.0;
  Shape crop_pad_size{64, 64};
  Shape model_input{1024, 1024};
  std::optional<double> resample_spacing;
  /// Multiplier mapping [0, rescale_max] to the backbone input range.
  double input_scale = 1.0 / 255.0;

  void validate() const;
};

struct FewShotSpec {
  int k = 10;
  std::uint64_t subset_seed = 0;
  std::uint64_t init_seed = 0;
};

/// Nearest-rank percentile: the value of rank ceil(pct/100 * n), rank >= 1.
double percentile_nearest_rank(std::span<const float> values, double pct);

/// Clip to the [clip_lo_pct, clip_hi_pct] percentiles, then min-max rescale
/// to [0, rescale_max]. A constant input maps to zeros.
std::vector<float> preprocess_intensity(std::span<const float> values, const PreprocessConfig& cfg);
Grid<float> preprocess_intensity(const Grid<float>& image, const PreprocessConfig& cfg);

struct Standardized {
  Grid<float> image;
  std::optional<Mask> mask;
  /// Grid after optional resampling, before crop/pad.
  Shape resampled_shape;
  /// Crop/pad maps resampled (r, c) to (r + row_shift, c + col_shift).
  int row_shift = 0;
  int col_shift = 0;
};

/// Optional resampling to cfg.resample_spacing (needs `spacing`), then a
/// centred crop/pad to cfg.crop_pad_size. Masks use nearest neighbour.
Standardized spatial_standardize(const Grid<float>& image, const Mask* mask, const PreprocessConfig& cfg,
                                 std::optional<std::array<double, 2>> spacing = std::nullopt);

/// Box carried through spatial_standardize; nullopt if cropped away entirely.
std::optional<TightBox> standardize_box(const TightBox& box, Shape original, const Standardized& s);

/// Replicate to three channels, bilinear resize to `model_input`, scale values.
ModelInput to_model_input(const Grid<float>& image, Shape model_input, double scale);

struct Sample {
  std::string id;
  Grid<float> image;
  std::optional<Mask> mask;
  std::optional<TightBox> box;
  Split split = Split::Train;

  /// The box label, derived from the mask when not given explicitly.
  TightBox weak_box() const;
  long foreground_size() const;
};

std::vector<Sample> load_samples(const DatasetManifest& manifest);
std::vector<Sample> filter_split(std::span<const Sample> samples, Split s);

std::vector<Sample> filter_min_foreground(std::span<const Sample> samples, long min_px);
DatasetManifest filter_min_foreground(const DatasetManifest& manifest, long min_px);

/// k distinct indices out of n, uniform without replacement, ascending.
std::vector<std::size_t> few_shot_indices(std::size_t n, const FewShotSpec& spec);
std::vector<Sample> sample_few_shot(std::span<const Sample> train, const FewShotSpec& spec);
DatasetManifest sample_few_shot(const DatasetManifest& manifest, const FewShotSpec& spec);

struct SynthOptions {
  bool rotate = true;
  double min_axis_frac = 0.14;
  double max_axis_frac = 0.30;
  double noise_std = 8.0;
};

/// Filled ellipses on a noisy background. Images are raw intensities (not
/// preprocessed); masks are ellipse indicators; boxes are the tight boxes.
std::vector<Sample> generate_synthetic(int n, std::uint64_t seed, Shape canvas, const SynthOptions& opts = {});

}  // namespace boxprompt
