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

#include "boxprompt/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "boxprompt/image_io.hpp"
#include "boxprompt/imageops.hpp"
#include "boxprompt/random.hpp"

namespace boxprompt {

namespace fs = std::filesystem;

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  fail(ErrorKind::FormatError, "unknown split '" + s + "'");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.id.empty()) fail(ErrorKind::FormatError, "manifest entry with empty id");
    if (!ids.insert(e.id).second) fail(ErrorKind::FormatError, "duplicate manifest id '" + e.id + "'");
    if (e.split == Split::Train && !e.box && !e.mask_path) {
      fail(ErrorKind::MissingMask, "train entry '" + e.id + "' has neither a box nor a mask");
    }
  }
}

DatasetManifest DatasetManifest::split(Split s) const {
  DatasetManifest out{{}, base_dir};
  for (const auto& e : entries) {
    if (e.split == s) out.entries.push_back(e);
  }
  return out;
}

nlohmann::json to_json(const ManifestEntry& e) {
  nlohmann::json j = {{"id", e.id}, {"image_path", e.image_path}, {"split", to_string(e.split)}};
  if (e.mask_path) j["mask_path"] = *e.mask_path;
  if (e.box) j["box"] = {e.box->rmin, e.box->cmin, e.box->rmax, e.box->cmax};
  if (e.spacing) j["spacing"] = {(*e.spacing)[0], (*e.spacing)[1]};
  return j;
}

ManifestEntry manifest_entry_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"id", "image_path", "mask_path", "box", "split", "spacing"};
  try {
    for (const auto& [key, _] : j.items()) {
      if (!known.contains(key)) fail(ErrorKind::FormatError, "unknown manifest field '" + key + "'");
    }
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.image_path = j.at("image_path").get<std::string>();
    e.split = split_from_string(j.value("split", std::string("train")));
    if (j.contains("mask_path") && !j["mask_path"].is_null()) e.mask_path = j["mask_path"].get<std::string>();
    if (j.contains("box") && !j["box"].is_null()) {
      const auto& b = j["box"];
      if (b.size() != 4) fail(ErrorKind::FormatError, "box must be [rmin,cmin,rmax,cmax]");
      e.box = TightBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
    }
    if (j.contains("spacing") && !j["spacing"].is_null()) {
      e.spacing = std::array<double, 2>{j["spacing"].at(0).get<double>(), j["spacing"].at(1).get<double>()};
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::FormatError, std::string("bad manifest record: ") + ex.what());
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::IOFailure, "cannot open manifest " + path.string());
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.entries.push_back(manifest_entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  m.validate();
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::IOFailure, "cannot open " + path.string() + " for writing");
  for (const auto& e : manifest.entries) os << to_json(e).dump() << '\n';
  if (!os) fail(ErrorKind::IOFailure, "write failed for " + path.string());
}

void PreprocessConfig::validate() const {
  if (!(0.0 <= clip_lo_pct && clip_lo_pct < clip_hi_pct && clip_hi_pct <= 100.0)) {
    fail(ErrorKind::InvalidConfig, "need 0 <= clip_lo_pct < clip_hi_pct <= 100");
  }
  if (!(rescale_max > 0.0)) fail(ErrorKind::InvalidConfig, "rescale_max must be > 0");
  if (crop_pad_size.rows < 1 || crop_pad_size.cols < 1 || model_input.rows < 1 || model_input.cols < 1) {
    fail(ErrorKind::InvalidConfig, "crop/pad and model input sizes must be positive");
  }
  if (resample_spacing && !(*resample_spacing > 0.0)) fail(ErrorKind::InvalidConfig, "spacing must be > 0");
}

double percentile_nearest_rank(std::span<const float> values, double pct) {
  if (values.empty()) fail(ErrorKind::EmptyInput, "percentile of an empty array");
  std::vector<float> v(values.begin(), values.end());
  const double n = static_cast<double>(v.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

std::vector<float> preprocess_intensity(std::span<const float> values, const PreprocessConfig& cfg) {
  if (values.empty()) fail(ErrorKind::EmptyInput, "cannot preprocess an empty image");
  for (float v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::FormatError, "image has non-finite intensities");
  }
  const double lo = percentile_nearest_rank(values, cfg.clip_lo_pct);
  const double hi = percentile_nearest_rank(values, cfg.clip_hi_pct);
  std::vector<float> out(values.size(), 0.0f);
  if (!(hi > lo)) return out;
  const double scale = cfg.rescale_max / (hi - lo);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(static_cast<double>(values[i]), lo, hi);
    out[i] = static_cast<float>((v - lo) * scale);
  }
  return out;
}

Grid<float> preprocess_intensity(const Grid<float>& image, const PreprocessConfig& cfg) {
  return Grid<float>(image.shape(), preprocess_intensity(image.values(), cfg));
}

namespace {

int centre_shift(int from, int to) {
  // Crop removes (from - to) / 2 leading pixels; pad adds (to - from) / 2.
  return from >= to ? -((from - to) / 2) : (to - from) / 2;
}

template <typename T>
Grid<T> crop_pad(const Grid<T>& in, Shape out, int rs, int cs) {
  Grid<T> res(out, T{});
  for (int r = 0; r < out.rows; ++r) {
    const int sr = r - rs;
    if (sr < 0 || sr >= in.rows()) continue;
    for (int c = 0; c < out.cols; ++c) {
      const int sc = c - cs;
      if (sc < 0 || sc >= in.cols()) continue;
      res(r, c) = in(sr, sc);
    }
  }
  return res;
}

}  // namespace

Standardized spatial_standardize(const Grid<float>& image, const Mask* mask, const PreprocessConfig& cfg,
                                 std::optional<std::array<double, 2>> spacing) {
  if (mask != nullptr && !(mask->shape() == image.shape())) {
    fail(ErrorKind::ShapeMismatch, "mask " + to_string(mask->shape()) + " vs image " + to_string(image.shape()));
  }
  Grid<float> img = image;
  std::optional<Mask> m;
  if (mask != nullptr) m = *mask;
  if (cfg.resample_spacing && spacing) {
    const double target = *cfg.resample_spacing;
    const Shape resampled{
        std::max(1, static_cast<int>(std::lround(image.rows() * (*spacing)[0] / target))),
        std::max(1, static_cast<int>(std::lround(image.cols() * (*spacing)[1] / target)))};
    img = resize_bilinear(img, resampled);
    if (m) m = resize_nearest(*m, resampled);
  }
  Standardized out;
  out.resampled_shape = img.shape();
  out.row_shift = centre_shift(img.rows(), cfg.crop_pad_size.rows);
  out.col_shift = centre_shift(img.cols(), cfg.crop_pad_size.cols);
  out.image = crop_pad(img, cfg.crop_pad_size, out.row_shift, out.col_shift);
  if (m) out.mask = crop_pad(*m, cfg.crop_pad_size, out.row_shift, out.col_shift);
  return out;
}

std::optional<TightBox> standardize_box(const TightBox& box, Shape original, const Standardized& s) {
  TightBox b = original == s.resampled_shape ? box : map_box_to_grid(box, original, s.resampled_shape);
  b.rmin += s.row_shift;
  b.rmax += s.row_shift;
  b.cmin += s.col_shift;
  b.cmax += s.col_shift;
  const Shape out = s.image.shape();
  if (b.rmax < 0 || b.cmax < 0 || b.rmin >= out.rows || b.cmin >= out.cols) return std::nullopt;
  b.rmin = std::max(b.rmin, 0);
  b.cmin = std::max(b.cmin, 0);
  b.rmax = std::min(b.rmax, out.rows - 1);
  b.cmax = std::min(b.cmax, out.cols - 1);
  return b;
}

ModelInput to_model_input(const Grid<float>& image, Shape model_input, double scale) {
  const Grid<float> resized = resize_bilinear(image, model_input);
  ModelInput mi{model_input, std::vector<float>(3 * model_input.size())};
  for (int ch = 0; ch < 3; ++ch) {
    for (std::size_t i = 0; i < resized.size(); ++i) {
      mi.values[ch * model_input.size() + i] = static_cast<float>(resized[i] * scale);
    }
  }
  return mi;
}

TightBox Sample::weak_box() const {
  if (box) return *box;
  if (mask) return tight_box_from_mask(*mask);
  fail(ErrorKind::MissingMask, "sample '" + id + "' has neither a box nor a mask");
}

long Sample::foreground_size() const {
  if (mask) return foreground_count(*mask);
  if (box) return box->area();
  return 0;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
  std::vector<Sample> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    Sample s;
    s.id = e.id;
    s.split = e.split;
    s.image = read_image_2d(manifest.base_dir / e.image_path);
    if (e.mask_path) {
      s.mask = read_mask_png(manifest.base_dir / *e.mask_path);
      if (!(s.mask->shape() == s.image.shape())) {
        fail(ErrorKind::ShapeMismatch, "mask and image shapes differ for '" + e.id + "'");
      }
    }
    if (e.box) {
      if (!e.box->fits(s.image.shape())) {
        fail(ErrorKind::BoxOutOfBounds, "box for '" + e.id + "' lies outside its image");
      }
      s.box = e.box;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> filter_split(std::span<const Sample> samples, Split s) {
  std::vector<Sample> out;
  for (const auto& x : samples) {
    if (x.split == s) out.push_back(x);
  }
  return out;
}

std::vector<Sample> filter_min_foreground(std::span<const Sample> samples, long min_px) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.foreground_size() >= min_px) out.push_back(s);
  }
  return out;
}

DatasetManifest filter_min_foreground(const DatasetManifest& manifest, long min_px) {
  DatasetManifest out{{}, manifest.base_dir};
  for (const auto& e : manifest.entries) {
    long fg = 0;
    if (min_px > 0) {
      if (e.mask_path) {
        fg = foreground_count(read_mask_png(manifest.base_dir / *e.mask_path));
      } else if (e.box) {
        fg = e.box->area();
      }
    }
    if (fg >= min_px) out.entries.push_back(e);
  }
  return out;
}

std::vector<std::size_t> few_shot_indices(std::size_t n, const FewShotSpec& spec) {
  if (spec.k < 1) fail(ErrorKind::InvalidConfig, "few-shot k must be >= 1");
  if (static_cast<std::size_t>(spec.k) > n) {
    fail(ErrorKind::KTooLarge, "k (" + std::to_string(spec.k) + ") exceeds the train split size (" +
                                   std::to_string(n) + ")");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(spec.subset_seed);
  for (std::size_t i = 0; i < static_cast<std::size_t>(spec.k); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(spec.k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Sample> sample_few_shot(std::span<const Sample> train, const FewShotSpec& spec) {
  std::vector<Sample> out;
  for (std::size_t i : few_shot_indices(train.size(), spec)) out.push_back(train[i]);
  return out;
}

DatasetManifest sample_few_shot(const DatasetManifest& manifest, const FewShotSpec& spec) {
  const DatasetManifest train = manifest.split(Split::Train);
  DatasetManifest out{{}, manifest.base_dir};
  for (std::size_t i : few_shot_indices(train.entries.size(), spec)) out.entries.push_back(train.entries[i]);
  return out;
}

std::vector<Sample> generate_synthetic(int n, std::uint64_t seed, Shape canvas, const SynthOptions& opts) {
  if (n < 1) fail(ErrorKind::InvalidConfig, "synthetic dataset size must be >= 1");
  if (canvas.rows < 8 || canvas.cols < 8) fail(ErrorKind::InvalidConfig, "synthetic canvas must be at least 8x8");
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(n);
  const double short_side = std::min(canvas.rows, canvas.cols);
  for (int i = 0; i < n; ++i) {
    const double a = rng.uniform(opts.min_axis_frac, opts.max_axis_frac) * short_side;
    const double b = rng.uniform(opts.min_axis_frac, opts.max_axis_frac) * short_side;
    const double theta = opts.rotate ? rng.uniform(0.0, M_PI) : 0.0;
    const double reach = std::max(a, b) + 1.0;
    const double cy = rng.uniform(reach, canvas.rows - reach);
    const double cx = rng.uniform(reach, canvas.cols - reach);
    const double background = rng.uniform(20.0, 60.0);
    const double foreground = background + rng.uniform(60.0, 140.0);
    const double ct = std::cos(theta), st = std::sin(theta);

    Sample s;
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%04d", i);
    s.id = name;
    s.image = Grid<float>(canvas);
    s.mask = Mask(canvas, 0);
    for (int r = 0; r < canvas.rows; ++r) {
      for (int c = 0; c < canvas.cols; ++c) {
        const double dy = r + 0.5 - cy, dx = c + 0.5 - cx;
        const double u = (dx * ct + dy * st) / a;
        const double v = (-dx * st + dy * ct) / b;
        const bool inside = u * u + v * v <= 1.0;
        (*s.mask)(r, c) = inside ? 1 : 0;
        s.image(r, c) = static_cast<float>((inside ? foreground : background) + opts.noise_std * rng.normal());
      }
    }
    s.box = tight_box_from_mask(*s.mask);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace boxprompt
