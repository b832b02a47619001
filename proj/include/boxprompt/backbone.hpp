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

// Adapter boundary to a frozen promptable segmentation backbone.
//
// A backbone exposes three frozen pieces: an image encoder, a mask decoder
// that consumes a prompt embedding, and its native box-prompt encoder. The
// decoder is differentiable with respect to the prompt embedding only.

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "boxprompt/embedding.hpp"

namespace boxprompt {

/// Saved decoder intermediates for the backward pass.
struct DecoderTrace {
  PromptEmbedding prompt;
  std::vector<double> hidden;
  std::vector<double> token_query;
  Shape logit_grid;
};

class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual std::string id() const = 0;
  virtual const BackboneShapeSpec& shape_spec() const = 0;
  /// Identifies weights and preprocessing version; part of every cache key.
  virtual std::string fingerprint() const = 0;
  /// Digest of every frozen weight. Must not change over a training run.
  virtual std::string weights_checksum() const = 0;

  virtual ImageEmbedding encode_image(const ModelInput& image, const std::string& source_id) const = 0;

  /// Mask logits on shape_spec().decoder_output_grid.
  virtual Grid<double> decode_logits(const ImageEmbedding& emb, const PromptEmbedding& prompt,
                                     DecoderTrace* trace = nullptr) const = 0;
  virtual PromptEmbedding decode_logits_backward(const ImageEmbedding& emb, const DecoderTrace& trace,
                                                 const Grid<double>& grad_logits) const = 0;

  virtual PromptEmbedding encode_box_prompt(const TightBox& box) const = 0;

  void check_embedding(const ImageEmbedding& emb) const;
  void check_prompt(const PromptEmbedding& prompt) const;
};

struct DecodeTrace {
  DecoderTrace decoder;
  ProbabilityMap probabilities;
};

/// sigmoid(resize(decoder logits, out_shape)).
ProbabilityMap decode_mask(const Backbone& backbone, const ImageEmbedding& emb, const PromptEmbedding& prompt,
                           Shape out_shape, DecodeTrace* trace = nullptr);

/// Gradient of a loss w.r.t. the prompt embedding given dL/df.
PromptEmbedding decode_mask_backward(const Backbone& backbone, const ImageEmbedding& emb, const DecodeTrace& trace,
                                     const Grid<double>& grad_prob);

struct ToyBackboneOptions {
  BackboneShapeSpec spec = BackboneShapeSpec::toy();
  int hidden = 16;
  std::uint64_t seed = 20240611;
  double decoder_bias = 0.0;
  double logit_gain = 8.0;
  double pixel_mean = 0.5;
  double pixel_std = 0.25;
};

/// Deterministic stand-in backbone with fixed seeded weights:
///   encoder  - strided linear patch projection to embed_channels x embed_grid;
///   decoder  - logit(p) = bias + a . d(p) + q . h(p) / sqrt(hidden), where
///              h(p) = W [e(p); d(p)] and q = M^T sum_k token_k, followed by
///              bilinear logit upsampling to decoder_output_grid;
///   box path - random Fourier corner tokens plus a constant dense embedding.
class ToyBackbone final : public Backbone {
 public:
  explicit ToyBackbone(ToyBackboneOptions opts = {});

  std::string id() const override { return "toy"; }
  const BackboneShapeSpec& shape_spec() const override { return opts_.spec; }
  std::string fingerprint() const override { return fingerprint_; }
  std::string weights_checksum() const override;

  ImageEmbedding encode_image(const ModelInput& image, const std::string& source_id) const override;
  Grid<double> decode_logits(const ImageEmbedding& emb, const PromptEmbedding& prompt,
                             DecoderTrace* trace = nullptr) const override;
  PromptEmbedding decode_logits_backward(const ImageEmbedding& emb, const DecoderTrace& trace,
                                         const Grid<double>& grad_logits) const override;
  PromptEmbedding encode_box_prompt(const TightBox& box) const override;

 private:
  ToyBackboneOptions opts_;
  int patch_rows_ = 0;
  int patch_cols_ = 0;
  std::vector<double> patch_proj_;    // C_e x (3 * pr * pc)
  std::vector<double> dense_readout_; // D
  std::vector<double> mix_;           // hidden x (C_e + D)
  std::vector<double> token_proj_;    // token_dim x hidden
  std::vector<double> fourier_;       // (token_dim / 2) x 2
  std::vector<double> corner_embed_;  // 2 x token_dim
  std::vector<double> no_mask_embed_; // D
  std::string fingerprint_;
};

/// "toy" or "medsam". The MedSAM ViT-B path needs its weight asset and a
/// native inference build; without them it throws BackboneUnavailable.
std::unique_ptr<Backbone> make_backbone(const std::string& id, const std::filesystem::path& weights = {});

}  // namespace boxprompt
