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

#include "boxprompt/promptnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "boxprompt/random.hpp"

namespace boxprompt {

namespace {

constexpr const char* kReduceW = "reduce.weight";
constexpr const char* kReduceB = "reduce.bias";
constexpr const char* kDenseW = "dense.weight";
constexpr const char* kDenseB = "dense.bias";
constexpr const char* kSparseW = "sparse_conv.weight";
constexpr const char* kSparseB = "sparse_conv.bias";
constexpr const char* kFcW = "sparse_fc.weight";
constexpr const char* kFcB = "sparse_fc.bias";

int cell_begin(int i, int extent, int cells) { return static_cast<int>(static_cast<long>(i) * extent / cells); }

ParameterSet layout(const PromptModuleConfig& c) {
  const int pooled = c.sparse_channels * c.pool_grid * c.pool_grid;
  ParameterSet p;
  p.arrays.emplace_back(kReduceW, std::vector<int>{c.reduced_channels, c.in_channels});
  p.arrays.emplace_back(kReduceB, std::vector<int>{c.reduced_channels});
  p.arrays.emplace_back(kDenseW, std::vector<int>{c.dense_out_channels, c.reduced_channels, 3, 3});
  p.arrays.emplace_back(kDenseB, std::vector<int>{c.dense_out_channels});
  p.arrays.emplace_back(kSparseW, std::vector<int>{c.sparse_channels, c.reduced_channels});
  p.arrays.emplace_back(kSparseB, std::vector<int>{c.sparse_channels});
  p.arrays.emplace_back(kFcW, std::vector<int>{c.sparse_tokens * c.sparse_dim, pooled});
  p.arrays.emplace_back(kFcB, std::vector<int>{c.sparse_tokens * c.sparse_dim});
  return p;
}

void init_uniform(Tensor& w, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : w.values) v = rng.uniform(-bound, bound);
}

}  // namespace

void PromptModuleConfig::validate() const {
  if (in_channels < 1 || reduced_channels < 1 || dense_out_channels < 1 || sparse_channels < 1 ||
      pool_grid < 1 || sparse_tokens < 1 || sparse_dim < 1 || grid.rows < 1 || grid.cols < 1) {
    fail(ErrorKind::ShapeSpecMismatch, "prompt module dimensions must all be >= 1");
  }
  if (pool_grid > grid.rows || pool_grid > grid.cols) {
    fail(ErrorKind::ShapeSpecMismatch, "pool_grid exceeds the embedding grid");
  }
}

void PromptModuleConfig::validate_against(const BackboneShapeSpec& spec) const {
  validate();
  if (in_channels != spec.embed_channels || !(grid == spec.embed_grid)) {
    fail(ErrorKind::ShapeSpecMismatch, "prompt module input does not match the backbone image embedding");
  }
  if (dense_out_channels != spec.dense_prompt_channels || !(grid == spec.dense_prompt_grid)) {
    fail(ErrorKind::ShapeSpecMismatch, "dense prompt shape does not match the backbone");
  }
  if (sparse_dim != spec.token_dim) {
    fail(ErrorKind::ShapeSpecMismatch, "sparse token dim does not match the backbone");
  }
}

std::size_t PromptModuleConfig::expected_parameter_count() const {
  const std::size_t c = in_channels, r = reduced_channels, d = dense_out_channels, s = sparse_channels;
  const std::size_t pooled = s * pool_grid * pool_grid;
  const std::size_t out = static_cast<std::size_t>(sparse_tokens) * sparse_dim;
  return (r * c + r) + (d * r * 9 + d) + (s * r + s) + (out * pooled + out);
}

PromptModuleConfig PromptModuleConfig::defaults_for(const BackboneShapeSpec& spec, std::uint64_t seed) {
  PromptModuleConfig c;
  c.in_channels = spec.embed_channels;
  c.reduced_channels = std::max(1, spec.embed_channels / 2);
  c.dense_out_channels = spec.dense_prompt_channels;
  c.sparse_tokens = 2;
  c.sparse_dim = spec.token_dim;
  c.grid = spec.embed_grid;
  c.init_seed = seed;
  if (spec == BackboneShapeSpec::medsam_vit_b()) {
    // 64 channels pooled over an 8x8 cell grid puts the module at ~2.4M weights.
    c.sparse_channels = 64;
    c.pool_grid = 8;
  } else {
    c.sparse_channels = c.reduced_channels;
    c.pool_grid = 1;
  }
  return c;
}

nlohmann::json PromptModuleConfig::to_json() const {
  return {{"in_channels", in_channels},         {"reduced_channels", reduced_channels},
          {"dense_out_channels", dense_out_channels}, {"sparse_channels", sparse_channels},
          {"pool_grid", pool_grid},             {"sparse_tokens", sparse_tokens},
          {"sparse_dim", sparse_dim},           {"grid", {grid.rows, grid.cols}},
          {"init_seed", init_seed}};
}

PromptModuleConfig PromptModuleConfig::from_json(const nlohmann::json& j) {
  try {
    PromptModuleConfig c;
    c.in_channels = j.at("in_channels").get<int>();
    c.reduced_channels = j.at("reduced_channels").get<int>();
    c.dense_out_channels = j.at("dense_out_channels").get<int>();
    c.sparse_channels = j.at("sparse_channels").get<int>();
    c.pool_grid = j.at("pool_grid").get<int>();
    c.sparse_tokens = j.at("sparse_tokens").get<int>();
    c.sparse_dim = j.at("sparse_dim").get<int>();
    c.grid = {j.at("grid").at(0).get<int>(), j.at("grid").at(1).get<int>()};
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, std::string("bad prompt module config: ") + e.what());
  }
}

PromptModule::PromptModule(const PromptModuleConfig& cfg) : cfg_(cfg), params_(layout(cfg)) {
  cfg_.validate();
  Rng rng(cfg.init_seed);
  init_uniform(params_.at(kReduceW), cfg.in_channels, rng);
  init_uniform(params_.at(kDenseW), cfg.reduced_channels * 9, rng);
  init_uniform(params_.at(kSparseW), cfg.reduced_channels, rng);
  init_uniform(params_.at(kFcW), cfg.sparse_channels * cfg.pool_grid * cfg.pool_grid, rng);
}

PromptModule::PromptModule(const PromptModuleConfig& cfg, ParameterSet params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  const ParameterSet expected = layout(cfg);
  if (params_.arrays.size() != expected.arrays.size()) {
    fail(ErrorKind::FormatError, "parameter set does not match the prompt module layout");
  }
  for (std::size_t i = 0; i < expected.arrays.size(); ++i) {
    if (params_.arrays[i].name != expected.arrays[i].name || params_.arrays[i].dims != expected.arrays[i].dims ||
        params_.arrays[i].values.size() != expected.arrays[i].values.size()) {
      fail(ErrorKind::FormatError, "parameter array '" + expected.arrays[i].name + "' has the wrong shape");
    }
  }
}

PromptEmbedding PromptModule::forward(const ImageEmbedding& emb, PromptTrace* trace) const {
  const auto& c = cfg_;
  if (emb.channels != c.in_channels || !(emb.grid == c.grid) ||
      emb.values.size() != static_cast<std::size_t>(c.in_channels) * c.grid.size()) {
    fail(ErrorKind::ShapeMismatch, "image embedding " + std::to_string(emb.channels) + "x" + to_string(emb.grid) +
                                       " does not match prompt module input " + std::to_string(c.in_channels) +
                                       "x" + to_string(c.grid));
  }
  const int H = c.grid.rows, W = c.grid.cols;
  const std::size_t N = c.grid.size();
  const int C = c.in_channels, R = c.reduced_channels, D = c.dense_out_channels, S = c.sparse_channels;
  const int P = c.pool_grid;

  PromptTrace local;
  PromptTrace& t = trace != nullptr ? *trace : local;
  t.input.assign(emb.values.begin(), emb.values.end());

  const auto& wr = params_.at(kReduceW).values;
  const auto& br = params_.at(kReduceB).values;
  t.reduced_pre.assign(static_cast<std::size_t>(R) * N, 0.0);
  for (int r = 0; r < R; ++r) {
    double* out = &t.reduced_pre[r * N];
    std::fill(out, out + N, br[r]);
    for (int ch = 0; ch < C; ++ch) {
      const double w = wr[static_cast<std::size_t>(r) * C + ch];
      const double* in = &t.input[ch * N];
      for (std::size_t n = 0; n < N; ++n) out[n] += w * in[n];
    }
  }
  t.reduced.resize(t.reduced_pre.size());
  std::transform(t.reduced_pre.begin(), t.reduced_pre.end(), t.reduced.begin(),
                 [](double v) { return v > 0.0 ? v : 0.0; });

  // Dense branch: 3x3 convolution, zero padding of one pixel.
  const auto& wd = params_.at(kDenseW).values;
  const auto& bd = params_.at(kDenseB).values;
  t.dense_pre.assign(static_cast<std::size_t>(D) * N, 0.0);
  for (int o = 0; o < D; ++o) {
    double* out = &t.dense_pre[o * N];
    std::fill(out, out + N, bd[o]);
    for (int r = 0; r < R; ++r) {
      const double* in = &t.reduced[r * N];
      for (int ki = 0; ki < 3; ++ki) {
        for (int kj = 0; kj < 3; ++kj) {
          const double w = wd[((static_cast<std::size_t>(o) * R + r) * 3 + ki) * 3 + kj];
          if (w == 0.0) continue;
          const int di = ki - 1, dj = kj - 1;
          const int i0 = std::max(0, -di), i1 = std::min(H, H - di);
          const int j0 = std::max(0, -dj), j1 = std::min(W, W - dj);
          for (int i = i0; i < i1; ++i) {
            const double* src = in + static_cast<std::size_t>(i + di) * W + dj;
            double* dst = out + static_cast<std::size_t>(i) * W;
            for (int j = j0; j < j1; ++j) dst[j] += w * src[j];
          }
        }
      }
    }
  }

  PromptEmbedding pe = PromptEmbedding::zeros(D, c.grid, c.sparse_tokens, c.sparse_dim);
  std::transform(t.dense_pre.begin(), t.dense_pre.end(), pe.dense.begin(),
                 [](double v) { return v > 0.0 ? v : 0.0; });

  // Sparse branch.
  const auto& ws = params_.at(kSparseW).values;
  const auto& bs = params_.at(kSparseB).values;
  t.sparse_pre.assign(static_cast<std::size_t>(S) * N, 0.0);
  for (int s = 0; s < S; ++s) {
    double* out = &t.sparse_pre[s * N];
    std::fill(out, out + N, bs[s]);
    for (int r = 0; r < R; ++r) {
      const double w = ws[static_cast<std::size_t>(s) * R + r];
      const double* in = &t.reduced[r * N];
      for (std::size_t n = 0; n < N; ++n) out[n] += w * in[n];
    }
  }
  const std::size_t cells = static_cast<std::size_t>(P) * P;
  t.pooled.assign(static_cast<std::size_t>(S) * cells, 0.0);
  t.argmax.assign(t.pooled.size(), 0);
  for (int s = 0; s < S; ++s) {
    const double* act = &t.sparse_pre[s * N];
    for (int pi = 0; pi < P; ++pi) {
      for (int pj = 0; pj < P; ++pj) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = 0;
        for (int i = cell_begin(pi, H, P); i < cell_begin(pi + 1, H, P); ++i) {
          for (int j = cell_begin(pj, W, P); j < cell_begin(pj + 1, W, P); ++j) {
            const int idx = i * W + j;
            const double v = act[idx] > 0.0 ? act[idx] : 0.0;
            if (v > best) {
              best = v;
              best_idx = idx;
            }
          }
        }
        const std::size_t slot = static_cast<std::size_t>(s) * cells + static_cast<std::size_t>(pi) * P + pj;
        t.pooled[slot] = best;
        t.argmax[slot] = best_idx;
      }
    }
  }

  const auto& wf = params_.at(kFcW).values;
  const auto& bf = params_.at(kFcB).values;
  const std::size_t M = t.pooled.size();
  for (std::size_t k = 0; k < pe.sparse.size(); ++k) {
    double acc = bf[k];
    const double* row = &wf[k * M];
    for (std::size_t m = 0; m < M; ++m) acc += row[m] * t.pooled[m];
    pe.sparse[k] = acc;
  }
  return pe;
}

void PromptModule::backward(const PromptTrace& t, const PromptEmbedding& g, ParameterSet& grads) const {
  const auto& c = cfg_;
  const int H = c.grid.rows, W = c.grid.cols;
  const std::size_t N = c.grid.size();
  const int C = c.in_channels, R = c.reduced_channels, D = c.dense_out_channels, S = c.sparse_channels;
  if (g.dense.size() != static_cast<std::size_t>(D) * N ||
      g.sparse.size() != static_cast<std::size_t>(c.sparse_tokens) * c.sparse_dim) {
    fail(ErrorKind::ShapeMismatch, "prompt gradient does not match the module output shape");
  }

  std::vector<double> grad_reduced(static_cast<std::size_t>(R) * N, 0.0);

  // Fully connected layer and max pooling.
  const auto& wf = params_.at(kFcW).values;
  auto& gwf = grads.at(kFcW).values;
  auto& gbf = grads.at(kFcB).values;
  const std::size_t M = t.pooled.size();
  std::vector<double> grad_pooled(M, 0.0);
  for (std::size_t k = 0; k < g.sparse.size(); ++k) {
    const double gk = g.sparse[k];
    gbf[k] += gk;
    if (gk == 0.0) continue;
    double* grow = &gwf[k * M];
    const double* row = &wf[k * M];
    for (std::size_t m = 0; m < M; ++m) {
      grow[m] += gk * t.pooled[m];
      grad_pooled[m] += gk * row[m];
    }
  }
  const std::size_t cells = static_cast<std::size_t>(c.pool_grid) * c.pool_grid;
  std::vector<double> grad_sparse_pre(static_cast<std::size_t>(S) * N, 0.0);
  for (int s = 0; s < S; ++s) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const std::size_t slot = static_cast<std::size_t>(s) * cells + cell;
      const std::size_t idx = static_cast<std::size_t>(s) * N + static_cast<std::size_t>(t.argmax[slot]);
      if (t.sparse_pre[idx] > 0.0) grad_sparse_pre[idx] += grad_pooled[slot];
    }
  }
  const auto& ws = params_.at(kSparseW).values;
  auto& gws = grads.at(kSparseW).values;
  auto& gbs = grads.at(kSparseB).values;
  for (int s = 0; s < S; ++s) {
    const double* gs = &grad_sparse_pre[s * N];
    for (std::size_t n = 0; n < N; ++n) gbs[s] += gs[n];
    for (int r = 0; r < R; ++r) {
      const double* a = &t.reduced[r * N];
      double* ga = &grad_reduced[r * N];
      const double w = ws[static_cast<std::size_t>(s) * R + r];
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        acc += gs[n] * a[n];
        ga[n] += w * gs[n];
      }
      gws[static_cast<std::size_t>(s) * R + r] += acc;
    }
  }

  // Dense branch.
  const auto& wd = params_.at(kDenseW).values;
  auto& gwd = grads.at(kDenseW).values;
  auto& gbd = grads.at(kDenseB).values;
  std::vector<double> grad_dense_pre(static_cast<std::size_t>(D) * N);
  for (std::size_t i = 0; i < grad_dense_pre.size(); ++i) {
    grad_dense_pre[i] = t.dense_pre[i] > 0.0 ? g.dense[i] : 0.0;
  }
  for (int o = 0; o < D; ++o) {
    const double* go = &grad_dense_pre[o * N];
    for (std::size_t n = 0; n < N; ++n) gbd[o] += go[n];
    for (int r = 0; r < R; ++r) {
      const double* in = &t.reduced[r * N];
      double* gin = &grad_reduced[r * N];
      for (int ki = 0; ki < 3; ++ki) {
        for (int kj = 0; kj < 3; ++kj) {
          const std::size_t widx = ((static_cast<std::size_t>(o) * R + r) * 3 + ki) * 3 + kj;
          const double w = wd[widx];
          const int di = ki - 1, dj = kj - 1;
          const int i0 = std::max(0, -di), i1 = std::min(H, H - di);
          const int j0 = std::max(0, -dj), j1 = std::min(W, W - dj);
          double acc = 0.0;
          for (int i = i0; i < i1; ++i) {
            const double* src = in + static_cast<std::size_t>(i + di) * W + dj;
            double* gsrc = gin + static_cast<std::size_t>(i + di) * W + dj;
            const double* gdst = go + static_cast<std::size_t>(i) * W;
            for (int j = j0; j < j1; ++j) {
              acc += gdst[j] * src[j];
              gsrc[j] += w * gdst[j];
            }
          }
          gwd[widx] += acc;
        }
      }
    }
  }

  // Shared 1x1 reduction.
  auto& gwr = grads.at(kReduceW).values;
  auto& gbr = grads.at(kReduceB).values;
  for (int r = 0; r < R; ++r) {
    double* ga = &grad_reduced[r * N];
    const double* pre = &t.reduced_pre[r * N];
    for (std::size_t n = 0; n < N; ++n) {
      if (pre[n] <= 0.0) ga[n] = 0.0;
      gbr[r] += ga[n];
    }
    for (int ch = 0; ch < C; ++ch) {
      const double* in = &t.input[ch * N];
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) acc += ga[n] * in[n];
      gwr[static_cast<std::size_t>(r) * C + ch] += acc;
    }
  }
}

}  // namespace boxprompt
