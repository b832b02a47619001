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

// Exercises the shared library through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxprompt/boxprompt.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s != nullptr ? s : "";
  bp_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and defaults") {
  CHECK(std::string(bp_version()) == "0.1.0");
  char* cfg = nullptr;
  REQUIRE(bp_default_config(&cfg) == BP_OK);
  const json j = json::parse(take(cfg));
  CHECK(j.at("lr") == 1e-3);
  CHECK(j.at("batch_size") == 4);
}

TEST_CASE("penalty through the C API") {
  double v = -1, d = -1;
  REQUIRE(bp_penalty("logbarrier", 5.0, 0.0, &v, &d) == BP_OK);
  CHECK(v == doctest::Approx(0.84379).epsilon(1e-5));
  CHECK(d == doctest::Approx(5.0));
  REQUIRE(bp_penalty("relu", 5.0, -1.0, &v, &d) == BP_OK);
  CHECK(v == 0.0);
  CHECK(bp_penalty("hinge", 5.0, 0.0, &v, &d) == BP_ERR_CONFIG);
  CHECK(std::string(bp_last_error_kind()) == "InvalidConfig");
  CHECK(std::strlen(bp_last_error()) > 0);
}

TEST_CASE("box losses through the C API") {
  // 10x10 box of ones, relu: tightness 0; emptiness 0 since the box fills the grid.
  std::vector<double> f(100, 1.0), grad(100, 0.0);
  double out[4];
  REQUIRE(bp_box_loss(f.data(), 10, 10, 0, 0, 9, 9, R"({"penalty":"relu"})", out, grad.data()) == BP_OK);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == doctest::Approx(5.0 * 10.0));  // mass 100 exceeds 0.9 * 100 by 10
  CHECK(out[3] == doctest::Approx(1e-2 * 50.0));
  CHECK(grad[0] == doctest::Approx(1e-2 * 5.0));

  std::vector<double> zeros(100, 0.0);
  REQUIRE(bp_box_loss(zeros.data(), 10, 10, 0, 0, 9, 9, R"({"penalty":"relu","t":5})", out, nullptr) == BP_OK);
  CHECK(out[1] == doctest::Approx(100.0));
  CHECK(out[2] == doctest::Approx(250.0));

  CHECK(bp_box_loss(f.data(), 10, 10, 0, 0, 10, 9, nullptr, out, nullptr) == BP_ERR_DATA);
  CHECK(std::string(bp_last_error_kind()) == "BoxOutOfBounds");
  CHECK(bp_box_loss(f.data(), 10, 10, 0, 0, 9, 9, R"({"tightness":1})", out, nullptr) == BP_ERR_CONFIG);
  CHECK(bp_box_loss(f.data(), 10, 10, 0, 0, 9, 9, "{not json", out, nullptr) == BP_ERR_CONFIG);
}

TEST_CASE("dice through the C API") {
  const std::uint8_t a[4] = {1, 1, 0, 0}, b[4] = {0, 1, 1, 0};
  double d = 0;
  REQUIRE(bp_dice(a, b, 4, &d) == BP_OK);
  CHECK(d == 0.5);
}

TEST_CASE("backbone and module handles") {
  bp_backbone* bb = nullptr;
  CHECK(bp_backbone_create("medsam", nullptr, &bb) == BP_ERR_BACKBONE);
  CHECK(bb == nullptr);
  REQUIRE(bp_backbone_create("toy", nullptr, &bb) == BP_OK);
  char* fp = nullptr;
  REQUIRE(bp_backbone_fingerprint(bb, &fp) == BP_OK);
  CHECK(take(fp).rfind("toy-v1-", 0) == 0);
  int rows = 0, cols = 0;
  REQUIRE(bp_backbone_input_size(bb, &rows, &cols) == BP_OK);
  CHECK(rows == 64);

  bp_module* m = nullptr;
  REQUIRE(bp_module_create(bb, 3, &m) == BP_OK);
  std::size_t n = 0;
  REQUIRE(bp_module_parameter_count(m, &n) == BP_OK);
  CHECK(n > 0);

  std::vector<float> img(40 * 50);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i % 255);
  std::vector<double> prob(img.size(), -1.0);
  REQUIRE(bp_predict(m, bb, img.data(), 40, 50, prob.data()) == BP_OK);
  for (double p : prob) REQUIRE((p >= 0.0 && p <= 1.0));

  const fs::path path = fs::temp_directory_path() / "bp_capi_module.bin";
  REQUIRE(bp_module_save(m, path.c_str()) == BP_OK);
  bp_module* loaded = nullptr;
  REQUIRE(bp_module_load(path.c_str(), &loaded) == BP_OK);
  std::vector<double> prob2(img.size());
  REQUIRE(bp_predict(loaded, bb, img.data(), 40, 50, prob2.data()) == BP_OK);
  for (std::size_t i = 0; i < prob.size(); ++i) REQUIRE(prob2[i] == doctest::Approx(prob[i]).epsilon(1e-5));
  CHECK(bp_module_load("/nonexistent/x.bin", &loaded) != BP_OK);
  fs::remove(path);

  CHECK(bp_predict(nullptr, bb, img.data(), 40, 50, prob.data()) == BP_ERR_CONFIG);
  bp_module_free(loaded);
  bp_module_free(m);
  bp_backbone_free(bb);
}

TEST_CASE("pipeline commands through the C API") {
  const fs::path dir = fs::temp_directory_path() / "bp_capi_run";
  fs::remove_all(dir);
  char* res = nullptr;
  const json synth = {{"out", (dir / "data").string()}, {"n", 15}, {"seed", 2}};
  REQUIRE(bp_run_command("synth", synth.dump().c_str(), &res) == BP_OK);
  const json s = json::parse(take(res));
  const std::string manifest = s.at("manifest");

  json tr = {{"manifest", manifest}, {"out", (dir / "run").string()}, {"epochs", 2}, {"k", 3}};
  REQUIRE(bp_run_command("train", tr.dump().c_str(), &res) == BP_OK);
  CHECK(json::parse(take(res)).at("train_size") == 3);

  tr["k"] = 100;
  CHECK(bp_run_command("train", tr.dump().c_str(), &res) == BP_ERR_CONFIG);
  CHECK(std::string(bp_last_error_kind()) == "KTooLarge");
  CHECK(bp_run_command("fly", "{}", &res) == BP_ERR_CONFIG);
  CHECK(bp_run_command("train", R"({"manifest":"/nonexistent/m.jsonl"})", &res) == BP_ERR_DATA);
  fs::remove_all(dir);
}
