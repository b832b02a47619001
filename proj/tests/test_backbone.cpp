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

#include "boxprompt/backbone.hpp"
#include "boxprompt/cache.hpp"
#include "boxprompt/hash.hpp"
#include "boxprompt/imageops.hpp"
#include "boxprompt/provider.hpp"
#include "oracle/oracle.hpp"

using namespace boxprompt;

namespace {

ModelInput random_input(Rng& rng, Shape s) {
  ModelInput in;
  in.shape = s;
  in.values.resize(3 * s.size());
  for (float& v : in.values) v = static_cast<float>(rng.uniform());
  return in;
}

PromptEmbedding random_prompt(Rng& rng, const BackboneShapeSpec& spec, double scale) {
  PromptEmbedding p = PromptEmbedding::zeros(spec.dense_prompt_channels, spec.dense_prompt_grid, 2, spec.token_dim);
  for (double& v : p.dense) v = scale * rng.normal();
  for (double& v : p.sparse) v = scale * rng.normal();
  return p;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("sha256 known answer") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  Sha256 h;
  h.update("a").update("bc");
  CHECK(h.hex() == sha256_hex("abc"));
}

TEST_CASE("toy encoder is deterministic and sensitive to single pixels") {
  const ToyBackbone bb;
  Rng rng(41);
  ModelInput in = random_input(rng, bb.shape_spec().input_size);
  const ImageEmbedding a = bb.encode_image(in, "x");
  CHECK(a == bb.encode_image(in, "x"));
  CHECK(a.channels == bb.shape_spec().embed_channels);
  CHECK(a.grid == bb.shape_spec().embed_grid);
  CHECK(a.fingerprint == bb.fingerprint());
  CHECK(a.source_id == "x");
  in.values[100] += 0.5f;
  CHECK_FALSE(a.values == bb.encode_image(in, "x").values);
}

TEST_CASE("toy encoder rejects the wrong input size") {
  const ToyBackbone bb;
  Rng rng(42);
  try {
    bb.encode_image(random_input(rng, {32, 32}), "x");
    FAIL("expected WrongInputSize");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::WrongInputSize);
  }
}

TEST_CASE("fingerprint and checksum follow the options") {
  const ToyBackbone a, b;
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.weights_checksum() == b.weights_checksum());
  CHECK(a.fingerprint().rfind("toy-v1-", 0) == 0);
  ToyBackboneOptions opts;
  opts.seed = 1;
  const ToyBackbone c(opts);
  CHECK(c.fingerprint() != a.fingerprint());
  CHECK(c.weights_checksum() != a.weights_checksum());
  opts = {};
  opts.logit_gain = 4.0;
  CHECK(ToyBackbone(opts).weights_checksum() != a.weights_checksum());
}

TEST_CASE("decoder outputs are probabilities on the requested grid") {
  const ToyBackbone bb;
  Rng rng(43);
  const ImageEmbedding emb = bb.encode_image(random_input(rng, bb.shape_spec().input_size), "x");
  for (Shape out : {Shape{64, 64}, Shape{37, 80}, Shape{7, 5}}) {
    const ProbabilityMap f = decode_mask(bb, emb, random_prompt(rng, bb.shape_spec(), 1.0), out);
    CHECK(f.shape() == out);
    for (double v : f.values()) REQUIRE((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("zero prompt with zero bias gives 0.5 everywhere") {
  const ToyBackbone bb;
  Rng rng(44);
  const ImageEmbedding emb = bb.encode_image(random_input(rng, bb.shape_spec().input_size), "x");
  const auto& s = bb.shape_spec();
  const ProbabilityMap f =
      decode_mask(bb, emb, PromptEmbedding::zeros(s.dense_prompt_channels, s.dense_prompt_grid, 2, s.token_dim),
                  {50, 50});
  for (double v : f.values()) REQUIRE(v == 0.5);
}

TEST_CASE("decoder rejects mismatched prompts") {
  const ToyBackbone bb;
  Rng rng(45);
  const ImageEmbedding emb = bb.encode_image(random_input(rng, bb.shape_spec().input_size), "x");
  PromptEmbedding p = PromptEmbedding::zeros(3, {4, 4}, 2, bb.shape_spec().token_dim);
  CHECK_THROWS_AS(decode_mask(bb, emb, p, {8, 8}), Error);
}

TEST_CASE("decoder gradient with respect to the prompt matches central differences") {
  const ToyBackbone bb;
  Rng rng(46);
  const ImageEmbedding emb = bb.encode_image(random_input(rng, bb.shape_spec().input_size), "x");
  const PromptEmbedding p = random_prompt(rng, bb.shape_spec(), 0.1);
  const Shape out{40, 48};
  Grid<double> weights(out);
  for (double& v : weights.values()) v = rng.normal();

  auto objective = [&](const PromptEmbedding& q) {
    const ProbabilityMap f = decode_mask(bb, emb, q, out);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += weights[i] * f[i];
    return s;
  };
  DecodeTrace trace;
  decode_mask(bb, emb, p, out, &trace);
  const PromptEmbedding g = decode_mask_backward(bb, emb, trace, weights);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.dense.size(); i += 97) {
    PromptEmbedding up = p, down = p;
    up.dense[i] += h;
    down.dense[i] -= h;
    REQUIRE(oracle::rel_err(g.dense[i], (objective(up) - objective(down)) / (2 * h)) <= 1e-6);
  }
  for (std::size_t i = 0; i < p.sparse.size(); ++i) {
    PromptEmbedding up = p, down = p;
    up.sparse[i] += h;
    down.sparse[i] -= h;
    REQUIRE(oracle::rel_err(g.sparse[i], (objective(up) - objective(down)) / (2 * h)) <= 1e-6);
  }
}

TEST_CASE("native box prompts are deterministic and distinguish boxes") {
  const ToyBackbone bb;
  const PromptEmbedding a = bb.encode_box_prompt({10, 10, 30, 30});
  CHECK(a == bb.encode_box_prompt({10, 10, 30, 30}));
  CHECK_FALSE(a == bb.encode_box_prompt({10, 10, 31, 30}));
  const PromptEmbedding one = bb.encode_box_prompt({5, 5, 5, 5});
  CHECK(one.sparse.size() == static_cast<std::size_t>(2 * bb.shape_spec().token_dim));
  for (double v : one.sparse) REQUIRE(std::isfinite(v));
}

TEST_CASE("medsam backbone is unavailable in this build") {
  try {
    make_backbone("medsam", "/nonexistent/medsam_vit_b.pth");
    FAIL("expected BackboneUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BackboneUnavailable);
  }
  CHECK(make_backbone("toy")->id() == "toy");
  CHECK_THROWS_AS(make_backbone("resnet"), Error);
}

TEST_CASE("bilinear resize and its adjoint satisfy <Ax, y> = <x, A^T y>") {
  Rng rng(47);
  for (int i = 0; i < 100; ++i) {
    const Shape in = oracle::random_shape(rng, 20), out = oracle::random_shape(rng, 30);
    const Grid<double> x = oracle::random_map(rng, in, -1, 1), y = oracle::random_map(rng, out, -1, 1);
    const Grid<double> ax = resize_bilinear(x, out), aty = resize_bilinear_adjoint(y, in);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < ax.size(); ++k) lhs += ax[k] * y[k];
    for (std::size_t k = 0; k < x.size(); ++k) rhs += x[k] * aty[k];
    REQUIRE(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
  const Grid<double> x = oracle::random_map(rng, {9, 4});
  CHECK(resize_bilinear(x, {9, 4}) == x);
}

TEST_CASE("embedding cache round trip, miss, idempotence and conflict") {
  TempDir dir("bp_test_cache");
  const ToyBackbone bb;
  Rng rng(48);
  const ImageEmbedding emb = bb.encode_image(random_input(rng, bb.shape_spec().input_size), "case-1");
  const std::string key = cache_key("case-1", bb.fingerprint());
  CHECK(key.size() == 64);
  CHECK(key != cache_key("case-2", bb.fingerprint()));

  CHECK_FALSE(cache_get(dir.path, key).has_value());
  CHECK_FALSE(cache_lookup(dir.path, "case-1", bb.fingerprint()).has_value());

  CHECK(cache_put(dir.path, emb) == CachePut::Written);
  CHECK(cache_put(dir.path, emb) == CachePut::AlreadyPresent);
  const auto got = cache_lookup(dir.path, "case-1", bb.fingerprint());
  REQUIRE(got.has_value());
  CHECK(got->values == emb.values);
  CHECK(got->channels == emb.channels);
  CHECK(got->grid == emb.grid);
  CHECK(got->fingerprint == emb.fingerprint);

  ImageEmbedding changed = emb;
  changed.values[0] += 1.0f;
  try {
    cache_put(dir.path, changed);
    FAIL("expected CacheConflict");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CacheConflict);
  }

  // A stored fingerprint that disagrees with its key is a conflict too.
  ImageEmbedding other = emb;
  other.fingerprint = "other";
  write_embedding_file(cache_path(dir.path, key), other);
  CHECK_THROWS_AS(cache_lookup(dir.path, "case-1", bb.fingerprint()), Error);
}

TEST_CASE("disk provider hits on the second pass and matches recompute bit for bit") {
  TempDir dir("bp_test_provider");
  const ToyBackbone bb;
  std::vector<Sample> samples = generate_synthetic(4, 3, {64, 64});
  EmbeddingProvider disk(bb, 1.0 / 255.0, EmbeddingProvider::Mode::Disk, dir.path);
  for (const Sample& s : samples) disk.get(s);
  CHECK(disk.stats().writes == 4);
  EmbeddingProvider disk2(bb, 1.0 / 255.0, EmbeddingProvider::Mode::Disk, dir.path);
  EmbeddingProvider fresh(bb, 1.0 / 255.0, EmbeddingProvider::Mode::Recompute);
  for (const Sample& s : samples) CHECK(disk2.get(s).values == fresh.get(s).values);
  CHECK(disk2.stats().hits == 4);
  CHECK(disk2.stats().encodes == 0);
  CHECK(fresh.stats().encodes == 4);
}
