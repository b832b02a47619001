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

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "boxprompt/checkpoint.hpp"
#include "boxprompt/promptnet.hpp"
#include "oracle/oracle.hpp"

using namespace boxprompt;

namespace {

// 8 channels on a 16x16 grid, 8-dim tokens.
BackboneShapeSpec small_spec() { return {8, {16, 16}, 8, {16, 16}, 8, {64, 64}, {64, 64}}; }

ImageEmbedding random_embedding(Rng& rng, int channels, Shape grid) {
  ImageEmbedding e;
  e.channels = channels;
  e.grid = grid;
  e.values.resize(static_cast<std::size_t>(channels) * grid.size());
  for (float& v : e.values) v = static_cast<float>(rng.normal());
  return e;
}

struct Pattern {
  std::vector<bool> relu;
  std::vector<int> argmax;
  bool operator==(const Pattern&) const = default;
};

Pattern pattern_of(const PromptTrace& t) {
  Pattern p;
  for (const auto* v : {&t.reduced_pre, &t.dense_pre, &t.sparse_pre}) {
    for (double x : *v) p.relu.push_back(x > 0.0);
  }
  p.argmax = t.argmax;
  return p;
}

double project(const PromptEmbedding& out, const PromptEmbedding& dir) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.dense.size(); ++i) s += out.dense[i] * dir.dense[i];
  for (std::size_t i = 0; i < out.sparse.size(); ++i) s += out.sparse[i] * dir.sparse[i];
  return s;
}

}  // namespace

TEST_CASE("small config has the documented widths and output shapes") {
  const PromptModuleConfig cfg = PromptModuleConfig::defaults_for(small_spec(), 3);
  CHECK(cfg.in_channels == 8);
  CHECK(cfg.reduced_channels == 4);
  CHECK(cfg.dense_out_channels == 8);
  CHECK(cfg.sparse_tokens == 2);
  CHECK(cfg.sparse_dim == 8);
  CHECK_NOTHROW(cfg.validate_against(small_spec()));

  Rng rng(1);
  const PromptModule m(cfg);
  const PromptEmbedding pe = m.forward(random_embedding(rng, 8, {16, 16}));
  CHECK(pe.dense_channels == 8);
  CHECK(pe.grid == Shape{16, 16});
  CHECK(pe.dense.size() == 8u * 16 * 16);
  CHECK(pe.tokens == 2);
  CHECK(pe.token_dim == 8);
  CHECK(pe.sparse.size() == 16u);
}

TEST_CASE("initialization is deterministic in the seed") {
  const PromptModuleConfig cfg = PromptModuleConfig::defaults_for(small_spec(), 42);
  CHECK(PromptModule(cfg).parameters() == PromptModule(cfg).parameters());
  PromptModuleConfig other = cfg;
  other.init_seed = 43;
  CHECK_FALSE(PromptModule(cfg).parameters() == PromptModule(other).parameters());
}

TEST_CASE("initialization uses fan-in bounds and zero biases") {
  const PromptModule m(PromptModuleConfig::defaults_for(small_spec(), 5));
  for (const Tensor& t : m.parameters().arrays) {
    const bool bias = t.dims.size() == 1;
    double fan_in = 1.0;
    for (std::size_t i = 1; i < t.dims.size(); ++i) fan_in *= t.dims[i];
    for (double v : t.values) {
      if (bias) {
        REQUIRE(v == 0.0);
      } else {
        REQUIRE(std::abs(v) <= 1.0 / std::sqrt(fan_in));
      }
    }
  }
}

TEST_CASE("zero embedding gives a zero dense prompt") {
  const PromptModuleConfig cfg = PromptModuleConfig::defaults_for(small_spec(), 9);
  ImageEmbedding e;
  e.channels = 8;
  e.grid = {16, 16};
  e.values.assign(8 * 256, 0.0f);
  const PromptEmbedding pe = PromptModule(cfg).forward(e);
  for (double v : pe.dense) REQUIRE(v == 0.0);
  for (double v : pe.sparse) REQUIRE(v == 0.0);
}

TEST_CASE("parameter count matches the closed form across widths") {
  for (int r : {1, 3, 8}) {
    for (int s : {1, 5}) {
      for (int p : {1, 2, 4}) {
        for (int tokens : {1, 3}) {
          PromptModuleConfig cfg = PromptModuleConfig::defaults_for(small_spec(), 0);
          cfg.reduced_channels = r;
          cfg.sparse_channels = s;
          cfg.pool_grid = p;
          cfg.sparse_tokens = tokens;
          const PromptModule m(cfg);
          std::size_t n = 0;
          for (const Tensor& t : m.parameters().arrays) n += Tensor::element_count(t.dims);
          REQUIRE(m.parameter_count() == n);
          REQUIRE(m.parameter_count() == cfg.expected_parameter_count());
        }
      }
    }
  }
}

TEST_CASE("the MedSAM preset sits near 2.4M parameters") {
  const PromptModuleConfig cfg = PromptModuleConfig::defaults_for(BackboneShapeSpec::medsam_vit_b(), 0);
  CHECK_NOTHROW(cfg.validate_against(BackboneShapeSpec::medsam_vit_b()));
  const std::size_t n = cfg.expected_parameter_count();
  CHECK(n >= 1'000'000u);
  CHECK(n <= 5'000'000u);
  CHECK(std::abs(static_cast<double>(n) - 2.4e6) / 2.4e6 < 0.05);
  CHECK(PromptModule(cfg).parameter_count() == n);
}

TEST_CASE("shape spec mismatches are rejected") {
  PromptModuleConfig cfg = PromptModuleConfig::defaults_for(small_spec(), 0);
  const auto expect_mismatch = [](const PromptModuleConfig& c, const BackboneShapeSpec& s) {
    try {
      c.validate_against(s);
      FAIL("expected ShapeSpecMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ShapeSpecMismatch);
    }
  };
  expect_mismatch(cfg, BackboneShapeSpec::toy());
  PromptModuleConfig bad = cfg;
  bad.sparse_dim = 7;
  expect_mismatch(bad, small_spec());
  bad = cfg;
  bad.dense_out_channels = 3;
  expect_mismatch(bad, small_spec());
  bad = cfg;
  bad.pool_grid = 17;
  CHECK_THROWS_AS(PromptModule{bad}, Error);
  bad = cfg;
  bad.reduced_channels = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("forward rejects an embedding of the wrong shape") {
  const PromptModule m(PromptModuleConfig::defaults_for(small_spec(), 0));
  Rng rng(2);
  try {
    m.forward(random_embedding(rng, 8, {8, 8}));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
}

TEST_CASE("parameter gradients match central differences") {
  Rng rng(31);
  const double h = 1e-6;
  int checked = 0, skipped = 0;
  for (int pool : {1, 2, 3}) {
    PromptModuleConfig cfg = PromptModuleConfig::defaults_for({6, {7, 9}, 5, {7, 9}, 4, {28, 36}, {28, 36}}, 7);
    cfg.pool_grid = pool;
    cfg.sparse_channels = 3;
    PromptModule m(cfg);
    for (Tensor& t : m.parameters().arrays) {
      if (t.dims.size() == 1) {
        for (double& v : t.values) v = rng.uniform(-0.2, 0.2);
      }
    }
    const ImageEmbedding emb = random_embedding(rng, 6, {7, 9});
    PromptTrace trace;
    PromptEmbedding dir = m.forward(emb, &trace);
    for (double& v : dir.dense) v = rng.normal();
    for (double& v : dir.sparse) v = rng.normal();
    const Pattern base = pattern_of(trace);

    ParameterSet grads = m.parameters().zeros_like();
    m.backward(trace, dir, grads);

    for (std::size_t a = 0; a < m.parameters().arrays.size(); ++a) {
      const std::size_t n = m.parameters().arrays[a].size();
      for (std::size_t i = 0; i < n; i += 1 + n / 40) {
        double& p = m.parameters().arrays[a].values[i];
        const double orig = p;
        PromptTrace tu, td;
        p = orig + h;
        const double up = project(m.forward(emb, &tu), dir);
        p = orig - h;
        const double down = project(m.forward(emb, &td), dir);
        p = orig;
        if (!(pattern_of(tu) == base) || !(pattern_of(td) == base)) {
          ++skipped;
          continue;
        }
        const double fd = (up - down) / (2.0 * h);
        INFO(m.parameters().arrays[a].name << "[" << i << "]");
        REQUIRE(oracle::rel_err(grads.arrays[a].values[i], fd) <= 1e-6);
        ++checked;
      }
    }
  }
  CHECK(checked > 200);
  CHECK(skipped < checked / 10);
}

TEST_CASE("config JSON round trip") {
  PromptModuleConfig cfg = PromptModuleConfig::defaults_for(small_spec(), 12345678901234ULL);
  cfg.pool_grid = 4;
  CHECK(PromptModuleConfig::from_json(cfg.to_json()) == cfg);
  nlohmann::json broken = cfg.to_json();
  broken.erase("sparse_dim");
  CHECK_THROWS_AS(PromptModuleConfig::from_json(broken), Error);
}

TEST_CASE("checkpoint round trip preserves outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "bp_test_ckpt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.bin";
  PromptModuleConfig cfg = PromptModuleConfig::defaults_for(small_spec(), 77);
  cfg.pool_grid = 2;
  const PromptModule m(cfg);
  save_checkpoint(path, m, {{"epoch", 3}});
  const Checkpoint ck = load_checkpoint(path);
  CHECK(ck.module.config() == cfg);
  CHECK(ck.meta.at("epoch") == 3);
  Rng rng(4);
  const ImageEmbedding e = random_embedding(rng, 8, {16, 16});
  const PromptEmbedding a = m.forward(e), b = ck.module.forward(e);
  for (std::size_t i = 0; i < a.dense.size(); ++i) REQUIRE(a.dense[i] == doctest::Approx(b.dense[i]).epsilon(1e-5));
  for (std::size_t i = 0; i < a.sparse.size(); ++i) REQUIRE(a.sparse[i] == doctest::Approx(b.sparse[i]).epsilon(1e-5));

  // Reloading the saved file again gives identical bits.
  save_checkpoint(dir / "m2.bin", ck.module, ck.meta);
  CHECK(load_checkpoint(dir / "m2.bin").module.parameters() == ck.module.parameters());

  std::ofstream(dir / "junk.bin") << "not a checkpoint";
  try {
    load_checkpoint(dir / "junk.bin");
    FAIL("expected FormatError");
  } catch (const Error& e2) {
    CHECK(e2.kind() == ErrorKind::FormatError);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), Error);
  std::filesystem::remove_all(dir);
}
