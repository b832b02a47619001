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

#include "boxprompt/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <type_traits>

#include "boxprompt/backbone.hpp"
#include "boxprompt/checkpoint.hpp"
#include "boxprompt/hash.hpp"
#include "boxprompt/image_io.hpp"
#include "boxprompt/imageops.hpp"
#include "boxprompt/provider.hpp"

namespace boxprompt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T as(const json& v, const std::string& key) {
  // nlohmann converts freely between numeric kinds and would truncate 2.5 to 2.
  bool ok = true;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_integer() && (std::is_signed_v<T> || v.get<long long>() >= 0);
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  }
  if (!ok) fail(ErrorKind::InvalidConfig, "config key '" + key + "' has the wrong type");
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::InvalidConfig, "config key '" + key + "' has the wrong type");
  }
}

std::uint64_t as_seed(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    fail(ErrorKind::InvalidConfig, "config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<std::uint64_t> as_seed_list(const json& v, const std::string& key) {
  if (!v.is_array()) fail(ErrorKind::InvalidConfig, "config key '" + key + "' must be a list of seeds");
  std::vector<std::uint64_t> out;
  for (const auto& x : v) out.push_back(as_seed(x, key));
  return out;
}

std::string to_string(EvalResolution r) { return r == EvalResolution::Original ? "original" : "model_input"; }

EvalResolution resolution_from_string(const std::string& s) {
  if (s == "original") return EvalResolution::Original;
  if (s == "model_input") return EvalResolution::ModelInput;
  fail(ErrorKind::InvalidConfig, "eval_resolution must be 'original' or 'model_input', got '" + s + "'");
}

using Setter = std::function<void(PipelineConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"backbone", [](auto& c, const json& v, const auto& k) { c.backbone = as<std::string>(v, k); }},
      {"backbone_weights", [](auto& c, const json& v, const auto& k) { c.backbone_weights = as<std::string>(v, k); }},
      {"cache", [](auto& c, const json& v, const auto& k) { c.cache = as<std::string>(v, k); }},
      {"manifest", [](auto& c, const json& v, const auto& k) { c.manifest = as<std::string>(v, k); }},
      {"out", [](auto& c, const json& v, const auto& k) { c.out = as<std::string>(v, k); }},
      {"checkpoint", [](auto& c, const json& v, const auto& k) { c.checkpoint = as<std::string>(v, k); }},
      {"image", [](auto& c, const json& v, const auto& k) { c.image = as<std::string>(v, k); }},
      {"clip_lo_pct", [](auto& c, const json& v, const auto& k) { c.preprocess.clip_lo_pct = as<double>(v, k); }},
      {"clip_hi_pct", [](auto& c, const json& v, const auto& k) { c.preprocess.clip_hi_pct = as<double>(v, k); }},
      {"rescale_max", [](auto& c, const json& v, const auto& k) { c.preprocess.rescale_max = as<double>(v, k); }},
      {"crop_pad_rows", [](auto& c, const json& v, const auto& k) { c.preprocess.crop_pad_size.rows = as<int>(v, k); }},
      {"crop_pad_cols", [](auto& c, const json& v, const auto& k) { c.preprocess.crop_pad_size.cols = as<int>(v, k); }},
      {"resample_spacing",
       [](auto& c, const json& v, const auto& k) {
         if (v.is_null()) {
           c.preprocess.resample_spacing.reset();
         } else {
           c.preprocess.resample_spacing = as<double>(v, k);
         }
       }},
      {"input_scale", [](auto& c, const json& v, const auto& k) { c.preprocess.input_scale = as<double>(v, k); }},
      {"min_foreground", [](auto& c, const json& v, const auto& k) { c.min_foreground = as<long>(v, k); }},
      {"k",
       [](auto& c, const json& v, const auto& k) {
         if (v.is_null()) {
           c.k.reset();
         } else {
           c.k = as<int>(v, k);
         }
       }},
      {"seed", [](auto& c, const json& v, const auto& k) { c.train.seed = as_seed(v, k); }},
      {"subset_seed", [](auto& c, const json& v, const auto& k) { c.subset_seed = as_seed(v, k); }},
      {"batch_size", [](auto& c, const json& v, const auto& k) { c.train.batch_size = as<int>(v, k); }},
      {"lr", [](auto& c, const json& v, const auto& k) { c.train.lr = as<double>(v, k); }},
      {"weight_decay", [](auto& c, const json& v, const auto& k) { c.train.weight_decay = as<double>(v, k); }},
      {"epochs", [](auto& c, const json& v, const auto& k) { c.train.epochs = as<int>(v, k); }},
      {"lr_drop_factor", [](auto& c, const json& v, const auto& k) { c.train.lr_drop_factor = as<double>(v, k); }},
      {"lr_drop_at", [](auto& c, const json& v, const auto& k) { c.train.lr_drop_at = as<double>(v, k); }},
      {"patience", [](auto& c, const json& v, const auto& k) { c.train.patience = as<int>(v, k); }},
      {"adam_beta1", [](auto& c, const json& v, const auto& k) { c.train.adam_beta1 = as<double>(v, k); }},
      {"adam_beta2", [](auto& c, const json& v, const auto& k) { c.train.adam_beta2 = as<double>(v, k); }},
      {"adam_eps", [](auto& c, const json& v, const auto& k) { c.train.adam_eps = as<double>(v, k); }},
      {"lambda_tight", [](auto& c, const json& v, const auto& k) { c.train.weights.lambda_tight = as<double>(v, k); }},
      {"lambda_size", [](auto& c, const json& v, const auto& k) { c.train.weights.lambda_size = as<double>(v, k); }},
      {"eps_lo", [](auto& c, const json& v, const auto& k) { c.train.prior.eps_lo = as<double>(v, k); }},
      {"eps_hi", [](auto& c, const json& v, const auto& k) { c.train.prior.eps_hi = as<double>(v, k); }},
      {"penalty",
       [](auto& c, const json& v, const auto& k) {
         try {
           c.train.penalty.kind = penalty_kind_from_string(as<std::string>(v, k));
         } catch (const Error& e) {
           fail(ErrorKind::InvalidConfig, e.what());
         }
       }},
      {"t", [](auto& c, const json& v, const auto& k) { c.train.penalty.t = as<double>(v, k); }},
      {"band_width", [](auto& c, const json& v, const auto& k) { c.train.band_width = as<int>(v, k); }},
      {"threshold", [](auto& c, const json& v, const auto& k) { c.train.threshold = as<double>(v, k); }},
      {"use_cache", [](auto& c, const json& v, const auto& k) { c.train.use_cache = as<bool>(v, k); }},
      {"eval_resolution",
       [](auto& c, const json& v, const auto& k) { c.eval_resolution = resolution_from_string(as<std::string>(v, k)); }},
      {"eval_split", [](auto& c, const json& v, const auto& k) { c.eval_split = as<std::string>(v, k); }},
      {"prompted_baseline", [](auto& c, const json& v, const auto& k) { c.prompted_baseline = as<bool>(v, k); }},
      {"reduced_channels", [](auto& c, const json& v, const auto& k) { c.reduced_channels = as<int>(v, k); }},
      {"sparse_channels", [](auto& c, const json& v, const auto& k) { c.sparse_channels = as<int>(v, k); }},
      {"pool_grid", [](auto& c, const json& v, const auto& k) { c.pool_grid = as<int>(v, k); }},
      {"sparse_tokens", [](auto& c, const json& v, const auto& k) { c.sparse_tokens = as<int>(v, k); }},
      {"n", [](auto& c, const json& v, const auto& k) { c.n = as<int>(v, k); }},
      {"canvas", [](auto& c, const json& v, const auto& k) { c.canvas = as<int>(v, k); }},
      {"val_fraction", [](auto& c, const json& v, const auto& k) { c.val_fraction = as<double>(v, k); }},
      {"test_fraction", [](auto& c, const json& v, const auto& k) { c.test_fraction = as<double>(v, k); }},
      {"noise_std", [](auto& c, const json& v, const auto& k) { c.noise_std = as<double>(v, k); }},
      {"subset_seeds", [](auto& c, const json& v, const auto& k) { c.subset_seeds = as_seed_list(v, k); }},
      {"init_seeds", [](auto& c, const json& v, const auto& k) { c.init_seeds = as_seed_list(v, k); }},
      {"threads", [](auto& c, const json& v, const auto& k) { c.threads = as<unsigned>(v, k); }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::InvalidConfig, what);
}

void require_path(const std::string& value, const std::string& key) {
  require(!value.empty(), "this command needs '" + key + "' to be set");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::IOFailure, "cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

Grid<std::uint8_t> to_u8(const Grid<float>& g) {
  Grid<std::uint8_t> out(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(g[i]), 0.0, 255.0)));
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& cfg, const Backbone& bb) {
  if (cfg.cache.empty()) {
    return std::make_unique<EmbeddingProvider>(bb, cfg.preprocess.input_scale, EmbeddingProvider::Mode::Memory);
  }
  return std::make_unique<EmbeddingProvider>(bb, cfg.preprocess.input_scale, EmbeddingProvider::Mode::Disk,
                                             cfg.cache);
}

std::vector<Sample> select_split(const std::vector<Sample>& samples, const std::string& split) {
  if (split == "all") return samples;
  Split s;
  try {
    s = split_from_string(split);
  } catch (const Error& e) {
    fail(ErrorKind::InvalidConfig, std::string("eval_split: ") + e.what());
  }
  return filter_split(samples, s);
}

// Loads a checkpoint and refuses to pair it with a different backbone.
PromptModule load_module_for(const PipelineConfig& cfg, const Backbone& bb) {
  require_path(cfg.checkpoint, "checkpoint");
  Checkpoint ck = load_checkpoint(cfg.checkpoint);
  if (ck.meta.contains("backbone_fingerprint") &&
      ck.meta["backbone_fingerprint"].get<std::string>() != bb.fingerprint()) {
    fail(ErrorKind::InvalidConfig, "checkpoint " + cfg.checkpoint + " was trained against backbone " +
                                       ck.meta["backbone_fingerprint"].get<std::string>() + ", not " +
                                       bb.fingerprint());
  }
  ck.module.config().validate_against(bb.shape_spec());
  return std::move(ck.module);
}

struct Slice2D {
  std::string id;
  Grid<float> image;
  std::optional<Mask> mask;
  std::optional<std::array<double, 2>> spacing;
};

Mask nonzero(const Grid<float>& g) {
  Mask m(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = g[i] != 0.0f ? 1 : 0;
  return m;
}

// Intensity-normalized 2-D items of one manifest entry. Volumes are
// normalized as a whole, then sliced.
std::vector<Slice2D> expand_entry(const DatasetManifest& m, const ManifestEntry& e, const PreprocessConfig& pre) {
  const fs::path image_path = m.base_dir / e.image_path;
  std::vector<Slice2D> out;
  if (is_nifti_path(image_path)) {
    Volume vol = read_nifti(image_path);
    vol.data = preprocess_intensity(vol.data, pre);
    std::optional<Volume> mvol;
    if (e.mask_path) {
      const fs::path mp = m.base_dir / *e.mask_path;
      if (!is_nifti_path(mp)) fail(ErrorKind::FormatError, "mask for volume '" + e.id + "' must be NIfTI");
      mvol = read_nifti(mp);
      if (mvol->nx != vol.nx || mvol->ny != vol.ny || mvol->nz != vol.nz) {
        fail(ErrorKind::ShapeMismatch, "mask and image volumes differ for '" + e.id + "'");
      }
    }
    const std::array<double, 2> spacing = e.spacing.value_or(std::array<double, 2>{vol.spacing[1], vol.spacing[0]});
    for (int z = 0; z < vol.nz; ++z) {
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "_z%03d", z);
      Slice2D s{vol.nz > 1 ? e.id + suffix : e.id, vol.slice(z), std::nullopt, spacing};
      if (mvol) s.mask = nonzero(mvol->slice(z));
      out.push_back(std::move(s));
    }
    return out;
  }
  Slice2D s{e.id, preprocess_intensity(read_png(image_path), pre), std::nullopt, e.spacing};
  if (e.mask_path) {
    s.mask = read_mask_png(m.base_dir / *e.mask_path);
    if (!(s.mask->shape() == s.image.shape())) fail(ErrorKind::ShapeMismatch, "mask and image differ for '" + e.id + "'");
  }
  out.push_back(std::move(s));
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  preprocess.validate();
  train.validate();
  require(min_foreground >= 0, "min_foreground must be >= 0");
  require(!k || *k >= 1, "k must be >= 1");
  require(reduced_channels >= 0 && sparse_channels >= 0 && pool_grid >= 0 && sparse_tokens >= 0,
          "module overrides must be >= 0");
  require(n >= 1, "n must be >= 1");
  require(canvas >= 8, "canvas must be >= 8");
  require(val_fraction >= 0.0 && test_fraction >= 0.0 && val_fraction + test_fraction < 1.0,
          "val_fraction and test_fraction must be >= 0 and sum below 1");
  require(noise_std >= 0.0, "noise_std must be >= 0");
  require(eval_split == "all" || eval_split == "train" || eval_split == "val" || eval_split == "test",
          "eval_split must be train, val, test or all");
}

PipelineConfig config_from_json(const json& j, PipelineConfig base) {
  if (!j.is_object()) fail(ErrorKind::InvalidConfig, "config must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) fail(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    it->second(base, value, key);
  }
  base.validate();
  return base;
}

json config_to_json(const PipelineConfig& c) {
  return {{"backbone", c.backbone},
          {"backbone_weights", c.backbone_weights},
          {"cache", c.cache},
          {"manifest", c.manifest},
          {"out", c.out},
          {"checkpoint", c.checkpoint},
          {"image", c.image},
          {"clip_lo_pct", c.preprocess.clip_lo_pct},
          {"clip_hi_pct", c.preprocess.clip_hi_pct},
          {"rescale_max", c.preprocess.rescale_max},
          {"crop_pad_rows", c.preprocess.crop_pad_size.rows},
          {"crop_pad_cols", c.preprocess.crop_pad_size.cols},
          {"resample_spacing", c.preprocess.resample_spacing ? json(*c.preprocess.resample_spacing) : json(nullptr)},
          {"input_scale", c.preprocess.input_scale},
          {"min_foreground", c.min_foreground},
          {"k", c.k ? json(*c.k) : json(nullptr)},
          {"seed", c.train.seed},
          {"subset_seed", c.subset_seed},
          {"batch_size", c.train.batch_size},
          {"lr", c.train.lr},
          {"weight_decay", c.train.weight_decay},
          {"epochs", c.train.epochs},
          {"lr_drop_factor", c.train.lr_drop_factor},
          {"lr_drop_at", c.train.lr_drop_at},
          {"patience", c.train.patience},
          {"adam_beta1", c.train.adam_beta1},
          {"adam_beta2", c.train.adam_beta2},
          {"adam_eps", c.train.adam_eps},
          {"lambda_tight", c.train.weights.lambda_tight},
          {"lambda_size", c.train.weights.lambda_size},
          {"eps_lo", c.train.prior.eps_lo},
          {"eps_hi", c.train.prior.eps_hi},
          {"penalty", to_string(c.train.penalty.kind)},
          {"t", c.train.penalty.t},
          {"band_width", c.train.band_width},
          {"threshold", c.train.threshold},
          {"use_cache", c.train.use_cache},
          {"eval_resolution", to_string(c.eval_resolution)},
          {"eval_split", c.eval_split},
          {"prompted_baseline", c.prompted_baseline},
          {"reduced_channels", c.reduced_channels},
          {"sparse_channels", c.sparse_channels},
          {"pool_grid", c.pool_grid},
          {"sparse_tokens", c.sparse_tokens},
          {"n", c.n},
          {"canvas", c.canvas},
          {"val_fraction", c.val_fraction},
          {"test_fraction", c.test_fraction},
          {"noise_std", c.noise_std},
          {"subset_seeds", c.subset_seeds},
          {"init_seeds", c.init_seeds},
          {"threads", c.threads}};
}

std::string config_fingerprint(const PipelineConfig& cfg) {
  json j = config_to_json(cfg);
  // Locations and worker counts do not change results.
  for (const char* key : {"out", "cache", "manifest", "checkpoint", "image", "threads"}) j.erase(key);
  return sha256_hex(j.dump()).substr(0, 16);
}

PromptModuleConfig module_config_for(const PipelineConfig& cfg, const BackboneShapeSpec& spec) {
  PromptModuleConfig m = PromptModuleConfig::defaults_for(spec, cfg.train.seed);
  if (cfg.reduced_channels > 0) m.reduced_channels = cfg.reduced_channels;
  if (cfg.sparse_channels > 0) m.sparse_channels = cfg.sparse_channels;
  if (cfg.pool_grid > 0) m.pool_grid = cfg.pool_grid;
  if (cfg.sparse_tokens > 0) m.sparse_tokens = cfg.sparse_tokens;
  m.validate_against(spec);
  return m;
}

json cmd_synth(const PipelineConfig& cfg) {
  cfg.validate();
  const int n_test = static_cast<int>(std::lround(cfg.n * cfg.test_fraction));
  const int n_val = static_cast<int>(std::lround(cfg.n * cfg.val_fraction));
  const int n_train = cfg.n - n_val - n_test;
  require(n_train >= 1, "synthetic split leaves no training samples");

  SynthOptions opts;
  opts.noise_std = cfg.noise_std;
  std::vector<Sample> samples = generate_synthetic(cfg.n, cfg.train.seed, {cfg.canvas, cfg.canvas}, opts);
  const fs::path out = cfg.out;
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");
  DatasetManifest manifest;
  manifest.base_dir = out;
  for (int i = 0; i < cfg.n; ++i) {
    Sample& s = samples[i];
    s.split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
    ManifestEntry e;
    e.id = s.id;
    e.image_path = "images/" + s.id + ".png";
    e.mask_path = "masks/" + s.id + ".png";
    e.box = s.box;
    e.split = s.split;
    // Written intensity-normalized so the dataset is ready for training.
    write_png8(out / e.image_path, to_u8(preprocess_intensity(s.image, cfg.preprocess)));
    write_mask_png(out / *e.mask_path, *s.mask);
    manifest.entries.push_back(std::move(e));
  }
  const fs::path mpath = out / "manifest.jsonl";
  write_manifest(mpath, manifest);
  return {{"manifest", mpath.string()}, {"n", cfg.n}, {"train", n_train}, {"val", n_val}, {"test", n_test}};
}

json cmd_preprocess(const PipelineConfig& cfg) {
  cfg.validate();
  require_path(cfg.manifest, "manifest");
  const DatasetManifest in = read_manifest(cfg.manifest);
  const fs::path out = cfg.out;
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");

  DatasetManifest result;
  result.base_dir = out;
  long dropped = 0;
  for (const auto& e : in.entries) {
    for (Slice2D& item : expand_entry(in, e, cfg.preprocess)) {
      const Shape original = item.image.shape();
      Standardized st = spatial_standardize(item.image, item.mask ? &*item.mask : nullptr, cfg.preprocess,
                                            item.spacing);
      ManifestEntry o;
      o.id = item.id;
      o.split = e.split;
      long fg = 0;
      if (st.mask) {
        fg = foreground_count(*st.mask);
        if (fg > 0) o.box = tight_box_from_mask(*st.mask);
      } else if (e.box) {
        o.box = standardize_box(*e.box, original, st);
        fg = o.box ? o.box->area() : 0;
      }
      if (fg < cfg.min_foreground || (!st.mask && !o.box)) {
        ++dropped;
        continue;
      }
      o.image_path = "images/" + o.id + ".png";
      write_png8(out / o.image_path, to_u8(st.image));
      if (st.mask) {
        o.mask_path = "masks/" + o.id + ".png";
        write_mask_png(out / *o.mask_path, *st.mask);
      }
      result.entries.push_back(std::move(o));
    }
  }
  result.validate();
  const fs::path mpath = out / "manifest.jsonl";
  write_manifest(mpath, result);
  return {{"manifest", mpath.string()}, {"kept", result.entries.size()}, {"dropped", dropped}};
}

json cmd_cache_embeddings(const PipelineConfig& cfg) {
  cfg.validate();
  require_path(cfg.manifest, "manifest");
  require_path(cfg.cache, "cache");
  const auto bb = make_backbone(cfg.backbone, cfg.backbone_weights);
  const std::vector<Sample> samples = load_samples(read_manifest(cfg.manifest));
  EmbeddingProvider provider(*bb, cfg.preprocess.input_scale, EmbeddingProvider::Mode::Disk, cfg.cache);
  for (const auto& s : samples) provider.get(s);
  const auto st = provider.stats();
  json summary = {{"entries", samples.size()}, {"hits", st.hits},        {"writes", st.writes},
                  {"encodes", st.encodes},     {"cache", cfg.cache},     {"fingerprint", bb->fingerprint()}};
  fs::create_directories(cfg.out);
  write_json(fs::path(cfg.out) / "cache_stats.json", summary);
  return summary;
}

json cmd_train(const PipelineConfig& cfg) {
  cfg.validate();
  require_path(cfg.manifest, "manifest");
  const auto bb = make_backbone(cfg.backbone, cfg.backbone_weights);
  const std::vector<Sample> samples = load_samples(read_manifest(cfg.manifest));
  const std::vector<Sample> pool = filter_split(samples, Split::Train);
  if (pool.empty()) fail(ErrorKind::EmptyTrainSet, "manifest has no train entries");
  const std::vector<Sample> subset =
      cfg.k ? sample_few_shot(pool, {*cfg.k, cfg.subset_seed, cfg.train.seed}) : pool;
  const std::vector<Sample> val = filter_split(samples, Split::Val);

  PromptModule module(module_config_for(cfg, bb->shape_spec()));
  auto provider = make_provider(cfg, *bb);
  const fs::path out = cfg.out;
  RunLabels labels{config_to_json(cfg), cfg.k ? std::optional<std::uint64_t>(cfg.subset_seed) : std::nullopt};
  const TrainResult r = train(cfg.train, subset, val, module, *provider, out, labels);
  return {{"run_record", (out / "run_record.json").string()},
          {"checkpoint", r.record.checkpoint_path},
          {"best_epoch", r.record.best_epoch},
          {"best_val_dice", r.record.best_val_dice ? json(*r.record.best_val_dice) : json(nullptr)},
          {"epochs_run", r.record.epochs.size()},
          {"train_size", subset.size()}};
}

json cmd_evaluate(const PipelineConfig& cfg) {
  cfg.validate();
  require_path(cfg.manifest, "manifest");
  const auto bb = make_backbone(cfg.backbone, cfg.backbone_weights);
  const PromptModule module = load_module_for(cfg, *bb);
  const std::vector<Sample> samples = select_split(load_samples(read_manifest(cfg.manifest)), cfg.eval_split);
  auto provider = make_provider(cfg, *bb);
  const EvalOptions opts{cfg.train.threshold, cfg.eval_resolution, config_fingerprint(cfg)};
  const MetricsReport report = evaluate(module, samples, *provider, opts);

  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_json(out / "metrics.json", report.to_json());
  std::ofstream csv(out / "per_sample.csv", std::ios::trunc);
  csv << "id,dice\n";
  for (const auto& s : report.per_sample) csv << s.id << ',' << json(s.dice).dump() << '\n';
  json summary = {{"metrics", (out / "metrics.json").string()}, {"mean", report.mean}, {"std", report.std},
                  {"n", report.n}};
  if (cfg.prompted_baseline) {
    const MetricsReport base = evaluate_prompted_baseline(samples, *provider, opts);
    write_json(out / "baseline_metrics.json", base.to_json());
    summary["baseline_mean"] = base.mean;
    summary["baseline_std"] = base.std;
  }
  return summary;
}

json cmd_predict(const PipelineConfig& cfg) {
  cfg.validate();
  require_path(cfg.image, "image");
  const auto bb = make_backbone(cfg.backbone, cfg.backbone_weights);
  const PromptModule module = load_module_for(cfg, *bb);
  Sample s;
  s.id = fs::path(cfg.image).stem().string();
  s.image = read_image_2d(cfg.image);
  EmbeddingProvider provider(*bb, cfg.preprocess.input_scale, EmbeddingProvider::Mode::Recompute);
  const ProbabilityMap f = resize_bilinear(predict(module, *bb, provider.get(s)), s.image.shape());

  Grid<std::uint16_t> prob(f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) prob[i] = static_cast<std::uint16_t>(std::lround(f[i] * 65535.0));
  const Mask mask = binarize(f, cfg.train.threshold);
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const fs::path prob_path = out / (s.id + "_prob.png");
  const fs::path mask_path = out / (s.id + "_mask.png");
  write_png16(prob_path, prob);
  write_mask_png(mask_path, mask);
  return {{"probability", prob_path.string()}, {"mask", mask_path.string()}, {"foreground_px", foreground_count(mask)}};
}

json cmd_experiment(const PipelineConfig& cfg) {
  cfg.validate();
  require_path(cfg.manifest, "manifest");
  const auto bb = make_backbone(cfg.backbone, cfg.backbone_weights);
  const std::vector<Sample> samples = load_samples(read_manifest(cfg.manifest));
  ExperimentSpec spec;
  spec.k = cfg.k.value_or(10);
  spec.subset_seeds = cfg.subset_seeds;
  spec.init_seeds = cfg.init_seeds;
  spec.threads = cfg.threads;
  auto provider = make_provider(cfg, *bb);
  const EvalOptions opts{cfg.train.threshold, cfg.eval_resolution, config_fingerprint(cfg)};
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const ExperimentReport rep = repeated_experiment(cfg.train, samples, spec, module_config_for(cfg, bb->shape_spec()),
                                                   *provider, opts, out, config_to_json(cfg));
  return {{"report", (out / "experiment_report.json").string()},
          {"mean", rep.aggregate.mean},
          {"std", rep.aggregate.std},
          {"runs", rep.aggregate.runs},
          {"mean_sample_std", rep.mean_sample_std}};
}

}  // namespace boxprompt
