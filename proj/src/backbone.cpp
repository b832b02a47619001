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

#include "boxprompt/backbone.hpp"

#include <cmath>
#include <fstream>

#include "boxprompt/hash.hpp"
#include "boxprompt/imageops.hpp"
#include "boxprompt/random.hpp"

namespace boxprompt {

namespace {

std::vector<double> gaussian(std::size_t n, double stddev, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = stddev * rng.normal();
  return v;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void Backbone::check_embedding(const ImageEmbedding& emb) const {
  const auto& s = shape_spec();
  if (emb.channels != s.embed_channels || !(emb.grid == s.embed_grid) ||
      emb.values.size() != static_cast<std::size_t>(s.embed_channels) * s.embed_grid.size()) {
    fail(ErrorKind::ShapeMismatch, "image embedding does not match backbone '" + id() + "'");
  }
}

void Backbone::check_prompt(const PromptEmbedding& p) const {
  const auto& s = shape_spec();
  if (p.dense_channels != s.dense_prompt_channels || !(p.grid == s.dense_prompt_grid) ||
      p.dense.size() != static_cast<std::size_t>(p.dense_channels) * p.grid.size() || p.token_dim != s.token_dim ||
      p.tokens < 1 || p.sparse.size() != static_cast<std::size_t>(p.tokens) * p.token_dim) {
    fail(ErrorKind::ShapeMismatch, "prompt embedding does not match backbone '" + id() + "'");
  }
}

ProbabilityMap decode_mask(const Backbone& backbone, const ImageEmbedding& emb, const PromptEmbedding& prompt,
                           Shape out_shape, DecodeTrace* trace) {
  if (out_shape.rows < 1 || out_shape.cols < 1) fail(ErrorKind::ShapeMismatch, "decode_mask needs a positive shape");
  Grid<double> logits = backbone.decode_logits(emb, prompt, trace != nullptr ? &trace->decoder : nullptr);
  ProbabilityMap f = resize_bilinear(logits, out_shape);
  for (double& v : f.values()) v = sigmoid(v);
  if (trace != nullptr) trace->probabilities = f;
  return f;
}

PromptEmbedding decode_mask_backward(const Backbone& backbone, const ImageEmbedding& emb, const DecodeTrace& trace,
                                     const Grid<double>& grad_prob) {
  const ProbabilityMap& f = trace.probabilities;
  if (!(grad_prob.shape() == f.shape())) fail(ErrorKind::ShapeMismatch, "gradient does not match decoded map");
  Grid<double> g(f.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_prob[i] * f[i] * (1.0 - f[i]);
  const Grid<double> g_logits = resize_bilinear_adjoint(g, backbone.shape_spec().decoder_output_grid);
  return backbone.decode_logits_backward(emb, trace.decoder, g_logits);
}

ToyBackbone::ToyBackbone(ToyBackboneOptions opts) : opts_(std::move(opts)) {
  const auto& s = opts_.spec;
  s.validate();
  if (s.input_size.rows % s.embed_grid.rows != 0 || s.input_size.cols % s.embed_grid.cols != 0) {
    fail(ErrorKind::ShapeSpecMismatch, "toy backbone needs input size divisible by the embedding grid");
  }
  if (opts_.hidden < 1) fail(ErrorKind::ShapeSpecMismatch, "toy backbone hidden width must be >= 1");
  patch_rows_ = s.input_size.rows / s.embed_grid.rows;
  patch_cols_ = s.input_size.cols / s.embed_grid.cols;
  const int patch = 3 * patch_rows_ * patch_cols_;
  const int D = s.dense_prompt_channels, Ce = s.embed_channels, T = s.token_dim;

  Rng rng(opts_.seed);
  patch_proj_ = gaussian(static_cast<std::size_t>(Ce) * patch, 1.0 / std::sqrt(patch), rng);
  dense_readout_ = gaussian(D, 1.0, rng);
  mix_ = gaussian(static_cast<std::size_t>(opts_.hidden) * (Ce + D), 1.0 / std::sqrt(Ce + D), rng);
  token_proj_ = gaussian(static_cast<std::size_t>(T) * opts_.hidden, 1.0 / std::sqrt(T), rng);
  fourier_ = gaussian(static_cast<std::size_t>(T / 2) * 2, 1.0, rng);
  corner_embed_ = gaussian(2 * static_cast<std::size_t>(T), 0.5, rng);
  no_mask_embed_ = gaussian(D, 0.1, rng);
  fingerprint_ = "toy-v1-" + weights_checksum().substr(0, 16) + "-pre1";
}

std::string ToyBackbone::weights_checksum() const {
  Sha256 h;
  for (const auto* w : {&patch_proj_, &dense_readout_, &mix_, &token_proj_, &fourier_, &corner_embed_,
                        &no_mask_embed_}) {
    h.update(std::span<const double>(*w));
  }
  h.update(&opts_.decoder_bias, sizeof(double));
  h.update(&opts_.logit_gain, sizeof(double));
  h.update(&opts_.pixel_mean, sizeof(double));
  h.update(&opts_.pixel_std, sizeof(double));
  return h.hex();
}

ImageEmbedding ToyBackbone::encode_image(const ModelInput& image, const std::string& source_id) const {
  const auto& s = opts_.spec;
  if (!(image.shape == s.input_size) || image.values.size() != 3 * s.input_size.size()) {
    fail(ErrorKind::WrongInputSize, "toy backbone expects 3x" + to_string(s.input_size) + " input, got " +
                                        to_string(image.shape));
  }
  const int Ce = s.embed_channels;
  const int gh = s.embed_grid.rows, gw = s.embed_grid.cols;
  const int W = s.input_size.cols;
  const std::size_t plane = s.input_size.size();
  const int patch = 3 * patch_rows_ * patch_cols_;
  ImageEmbedding emb{Ce, s.embed_grid, std::vector<float>(static_cast<std::size_t>(Ce) * gh * gw), source_id,
                     fingerprint_};
  std::vector<double> px(patch);
  for (int i = 0; i < gh; ++i) {
    for (int j = 0; j < gw; ++j) {
      int k = 0;
      for (int ch = 0; ch < 3; ++ch) {
        for (int u = 0; u < patch_rows_; ++u) {
          for (int v = 0; v < patch_cols_; ++v) {
            const std::size_t idx = ch * plane + static_cast<std::size_t>(i * patch_rows_ + u) * W +
                                    static_cast<std::size_t>(j * patch_cols_ + v);
            px[k++] = (image.values[idx] - opts_.pixel_mean) / opts_.pixel_std;
          }
        }
      }
      for (int c = 0; c < Ce; ++c) {
        const double* w = &patch_proj_[static_cast<std::size_t>(c) * patch];
        double acc = 0.0;
        for (int q = 0; q < patch; ++q) acc += w[q] * px[q];
        emb.values[(static_cast<std::size_t>(c) * gh + i) * gw + j] = static_cast<float>(acc);
      }
    }
  }
  return emb;
}

Grid<double> ToyBackbone::decode_logits(const ImageEmbedding& emb, const PromptEmbedding& prompt,
                                        DecoderTrace* trace) const {
  check_embedding(emb);
  check_prompt(prompt);
  const auto& s = opts_.spec;
  const int Ce = s.embed_channels, D = s.dense_prompt_channels, T = s.token_dim, Hd = opts_.hidden;
  const std::size_t N = s.embed_grid.size();
  const double norm = 1.0 / std::sqrt(static_cast<double>(Hd));

  std::vector<double> q(Hd, 0.0);
  for (int k = 0; k < prompt.tokens; ++k) {
    for (int j = 0; j < T; ++j) {
      const double tv = prompt.sparse[static_cast<std::size_t>(k) * T + j];
      for (int h = 0; h < Hd; ++h) q[h] += token_proj_[static_cast<std::size_t>(j) * Hd + h] * tv;
    }
  }

  std::vector<double> hidden(static_cast<std::size_t>(Hd) * N, 0.0);
  Grid<double> logits(s.embed_grid, opts_.decoder_bias);
  for (std::size_t n = 0; n < N; ++n) {
    double lin = 0.0;
    for (int d = 0; d < D; ++d) lin += dense_readout_[d] * prompt.dense[d * N + n];
    double inter = 0.0;
    for (int h = 0; h < Hd; ++h) {
      const double* row = &mix_[static_cast<std::size_t>(h) * (Ce + D)];
      double acc = 0.0;
      for (int c = 0; c < Ce; ++c) acc += row[c] * emb.values[c * N + n];
      for (int d = 0; d < D; ++d) acc += row[Ce + d] * prompt.dense[d * N + n];
      hidden[h * N + n] = acc;
      inter += q[h] * acc;
    }
    logits[n] += opts_.logit_gain * (lin + norm * inter);
  }
  if (trace != nullptr) {
    trace->prompt = prompt;
    trace->hidden = std::move(hidden);
    trace->token_query = std::move(q);
    trace->logit_grid = s.embed_grid;
  }
  return resize_bilinear(logits, s.decoder_output_grid);
}

PromptEmbedding ToyBackbone::decode_logits_backward(const ImageEmbedding& emb, const DecoderTrace& trace,
                                                    const Grid<double>& grad_logits) const {
  check_embedding(emb);
  const auto& s = opts_.spec;
  if (!(grad_logits.shape() == s.decoder_output_grid)) {
    fail(ErrorKind::ShapeMismatch, "logit gradient must be on the decoder output grid");
  }
  const int Ce = s.embed_channels, D = s.dense_prompt_channels, T = s.token_dim, Hd = opts_.hidden;
  const std::size_t N = s.embed_grid.size();
  const double norm = 1.0 / std::sqrt(static_cast<double>(Hd));
  Grid<double> g = resize_bilinear_adjoint(grad_logits, s.embed_grid);
  for (double& v : g.values()) v *= opts_.logit_gain;

  PromptEmbedding out = PromptEmbedding::zeros(D, s.dense_prompt_grid, trace.prompt.tokens, T);
  std::vector<double> dense_coef(D);
  for (int d = 0; d < D; ++d) {
    double acc = 0.0;
    for (int h = 0; h < Hd; ++h) acc += trace.token_query[h] * mix_[static_cast<std::size_t>(h) * (Ce + D) + Ce + d];
    dense_coef[d] = dense_readout_[d] + norm * acc;
  }
  std::vector<double> grad_q(Hd, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    const double gn = g[n];
    if (gn == 0.0) continue;
    for (int d = 0; d < D; ++d) out.dense[d * N + n] = gn * dense_coef[d];
    for (int h = 0; h < Hd; ++h) grad_q[h] += norm * gn * trace.hidden[h * N + n];
  }
  for (int j = 0; j < T; ++j) {
    double acc = 0.0;
    for (int h = 0; h < Hd; ++h) acc += token_proj_[static_cast<std::size_t>(j) * Hd + h] * grad_q[h];
    for (int k = 0; k < out.tokens; ++k) out.sparse[static_cast<std::size_t>(k) * T + j] = acc;
  }
  return out;
}

PromptEmbedding ToyBackbone::encode_box_prompt(const TightBox& box) const {
  const auto& s = opts_.spec;
  if (!box.fits(s.input_size)) {
    fail(ErrorKind::BoxOutOfBounds, "box " + to_string(box) + " outside model input " + to_string(s.input_size));
  }
  const int D = s.dense_prompt_channels, T = s.token_dim;
  PromptEmbedding p = PromptEmbedding::zeros(D, s.dense_prompt_grid, 2, T);
  const std::size_t N = s.dense_prompt_grid.size();
  for (int d = 0; d < D; ++d) std::fill_n(p.dense.begin() + d * N, N, no_mask_embed_[d]);

  const double corners[2][2] = {{static_cast<double>(box.rmin), static_cast<double>(box.cmin)},
                                {box.rmax + 1.0, box.cmax + 1.0}};
  for (int k = 0; k < 2; ++k) {
    const double y = 2.0 * corners[k][0] / s.input_size.rows - 1.0;
    const double x = 2.0 * corners[k][1] / s.input_size.cols - 1.0;
    double* tok = &p.sparse[static_cast<std::size_t>(k) * T];
    for (int i = 0; i < T / 2; ++i) {
      const double proj = 2.0 * M_PI * (fourier_[2 * i] * x + fourier_[2 * i + 1] * y);
      tok[i] = std::sin(proj);
      tok[T / 2 + i] = std::cos(proj);
    }
    for (int j = 0; j < T; ++j) tok[j] += corner_embed_[static_cast<std::size_t>(k) * T + j];
  }
  return p;
}

std::unique_ptr<Backbone> make_backbone(const std::string& id, const std::filesystem::path& weights) {
  if (id == "toy") return std::make_unique<ToyBackbone>();
  if (id == "medsam") {
    if (weights.empty() || !std::filesystem::is_regular_file(weights)) {
      fail(ErrorKind::BackboneUnavailable,
           "MedSAM ViT-B weights not found" + (weights.empty() ? std::string() : " at " + weights.string()));
    }
    fail(ErrorKind::BackboneUnavailable,
         "MedSAM ViT-B inference is not compiled into this build (weights at " + weights.string() + ")");
  }
  fail(ErrorKind::InvalidConfig, "unknown backbone '" + id + "' (expected toy or medsam)");
}

}  // namespace boxprompt
