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

#include <algorithm>

#include "boxprompt/eval.hpp"
#include "oracle/oracle.hpp"

using namespace boxprompt;

namespace {

double dice_oracle(const Mask& a, const Mask& b) {
  double inter = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    sa += a[i];
    sb += b[i];
  }
  return sa + sb == 0 ? 1.0 : 2.0 * inter / (sa + sb);
}

MetricsReport report_of(std::vector<double> dices) {
  std::vector<SampleScore> s;
  for (std::size_t i = 0; i < dices.size(); ++i) s.push_back({"s" + std::to_string(i), dices[i]});
  return MetricsReport::from_scores(std::move(s), "fp");
}

}  // namespace

TEST_CASE("dice examples") {
  const Mask a({1, 4}, std::vector<std::uint8_t>{1, 1, 0, 0});
  const Mask b({1, 4}, std::vector<std::uint8_t>{0, 1, 1, 0});
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, b) == 0.5);
  CHECK(dice(a, Mask({1, 4}, 0)) == 0.0);
  CHECK(dice(Mask({1, 4}, 0), Mask({1, 4}, 0)) == 1.0);
  CHECK_THROWS_AS(dice(a, Mask({2, 2}, 0)), Error);
}

TEST_CASE("dice agrees with the oracle, is symmetric and bounded") {
  Rng rng(61);
  for (int i = 0; i < 300; ++i) {
    const Shape s = oracle::random_shape(rng, 20);
    const Mask a = oracle::random_mask(rng, s, rng.uniform()), b = oracle::random_mask(rng, s, rng.uniform());
    const double d = dice(a, b);
    REQUIRE(d == doctest::Approx(dice_oracle(a, b)).epsilon(1e-15));
    REQUIRE(d == dice(b, a));
    REQUIRE((d >= 0.0 && d <= 1.0));
  }
}

TEST_CASE("binarize uses >= threshold") {
  const ProbabilityMap f({1, 3}, std::vector<double>{0.49, 0.5, 0.9});
  CHECK(binarize(f).storage() == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(binarize(f, 0.95).storage() == std::vector<std::uint8_t>{0, 0, 0});
}

TEST_CASE("report statistics and JSON round trip") {
  const MetricsReport r = report_of({0.5, 1.0, 0.75, 0.75});
  CHECK(r.n == 4);
  CHECK(r.mean == doctest::Approx(0.75));
  CHECK(r.std == doctest::Approx(std::sqrt(0.125 / 4)));
  CHECK(r.config_fingerprint == "fp");
  const MetricsReport back = MetricsReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  CHECK(back.mean == r.mean);
  try {
    MetricsReport::from_scores({}, "fp");
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyInput);
  }
}

TEST_CASE("run aggregation") {
  const std::vector<MetricsReport> two{report_of({0.8}), report_of({0.9})};
  const RunAggregate agg = aggregate_runs(two);
  CHECK(agg.mean == doctest::Approx(0.85));
  CHECK(agg.std == doctest::Approx(0.05));
  CHECK(agg.runs == 2);
  try {
    aggregate_runs(std::vector<MetricsReport>{});
    FAIL("expected EmptyList");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyList);
  }
}

TEST_CASE("aggregation is permutation invariant to the last bit") {
  Rng rng(62);
  for (int i = 0; i < 50; ++i) {
    std::vector<MetricsReport> rs;
    for (int k = 0; k < 9; ++k) rs.push_back(report_of({rng.uniform(), rng.uniform()}));
    const RunAggregate a = aggregate_runs(rs);
    for (std::size_t k = rs.size() - 1; k > 0; --k) std::swap(rs[k], rs[rng.below(k + 1)]);
    const RunAggregate b = aggregate_runs(rs);
    REQUIRE(a.mean == b.mean);
    REQUIRE(a.std == b.std);
  }
}
