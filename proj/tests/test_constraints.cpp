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

#include <cmath>

#include "boxprompt/constraints.hpp"
#include "oracle/oracle.hpp"

using namespace boxprompt;

namespace {

const PenaltyConfig kRelu{PenaltyKind::ScaledRelu, 5.0};
const PenaltyConfig kBarrier{PenaltyKind::PseudoLogBarrier, 5.0};

}  // namespace

TEST_CASE("penalty examples") {
  CHECK(penalty(-1.0, kRelu) == 0.0);
  CHECK(penalty(-1.0, kBarrier) == 0.0);
  CHECK(penalty(0.0, kBarrier) == doctest::Approx(std::log(25.0) / 5.0 + 0.2).epsilon(1e-12));
  CHECK(std::abs(penalty(0.0, kBarrier) - 0.8437752) < 1e-7);
  CHECK(penalty(2.0, kRelu) == 10.0);
}

TEST_CASE("penalty config validation") {
  CHECK_THROWS_AS((PenaltyConfig{PenaltyKind::PseudoLogBarrier, 0.0}.validate()), Error);
  CHECK_THROWS_AS((PenaltyConfig{PenaltyKind::ScaledRelu, -1.0}.validate()), Error);
  CHECK_THROWS_AS((SizePrior{0.9, 0.5}.validate()), Error);
  CHECK_THROWS_AS((LossWeights{-1.0, 0.0}.validate()), Error);
  CHECK(penalty_kind_from_string("scaled_relu") == PenaltyKind::ScaledRelu);
  CHECK(penalty_kind_from_string(to_string(PenaltyKind::PseudoLogBarrier)) == PenaltyKind::PseudoLogBarrier);
  CHECK_THROWS_AS(penalty_kind_from_string("hinge"), Error);
}

TEST_CASE("barrier is C1 at the knee") {
  for (double t : {1.0, 5.0, 50.0}) {
    const PenaltyConfig cfg{PenaltyKind::PseudoLogBarrier, t};
    const double knee = -1.0 / (t * t);
    const double left = -std::log(-knee) / t;
    const double right = t * knee - std::log(1.0 / (t * t)) / t + 1.0 / t;
    CHECK(std::abs(left - right) <= 1e-9);
    CHECK(std::abs(penalty(std::nextafter(knee, -1.0), cfg) - penalty(std::nextafter(knee, 1.0), cfg)) <= 1e-9);
    const double dl = penalty_derivative(std::nextafter(knee, -1.0), cfg);
    const double dr = penalty_derivative(std::nextafter(knee, 1.0), cfg);
    CHECK(std::abs(dl - dr) <= 1e-6);
    CHECK(dr == doctest::Approx(t));
  }
}

TEST_CASE("penalty matches the oracle and is non-decreasing") {
  oracle::Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const double t = rng.uniform(0.5, 60.0);
    const double z = rng.uniform(-10.0, 10.0);
    for (bool lb : {false, true}) {
      const PenaltyConfig cfg{lb ? PenaltyKind::PseudoLogBarrier : PenaltyKind::ScaledRelu, t};
      REQUIRE(oracle::rel_err(penalty(z, cfg), oracle::psi(z, t, lb), 1e-12) <= 1e-12);
      const double dz = rng.uniform(0.0, 1.0);
      REQUIRE(penalty(z + dz, cfg) >= penalty(z, cfg));
      REQUIRE(penalty_derivative(z, cfg) >= 0.0);
    }
  }
}

TEST_CASE("barrier approaches a hard constraint as t grows") {
  // Feasible points cost nearly nothing, infeasible points cost without bound.
  double prev_feasible = 1e9, prev_infeasible = 0.0;
  for (double t : {5.0, 50.0, 500.0, 5000.0}) {
    const PenaltyConfig cfg{PenaltyKind::PseudoLogBarrier, t};
    const double feasible = std::abs(penalty(-0.5, cfg));
    const double infeasible = penalty(0.1, cfg);
    CHECK(feasible < prev_feasible);
    CHECK(infeasible > prev_infeasible);
    prev_feasible = feasible;
    prev_infeasible = infeasible;
  }
  CHECK(prev_feasible < 2e-4);
  CHECK(prev_infeasible > 400.0);
}

TEST_CASE("emptiness examples") {
  const RegionPartition part = partition_regions({0, 0, 0, 0}, {2, 2});
  ProbabilityMap f({2, 2}, 0.5);
  CHECK(emptiness_loss(f, part) == doctest::Approx(-3.0 * std::log(0.5)).epsilon(1e-12));
  CHECK(emptiness_loss(f, part) == doctest::Approx(2.07944).epsilon(1e-5));

  ProbabilityMap zero({2, 2}, 0.0);
  zero(0, 0) = 1.0;
  CHECK(emptiness_loss(zero, part) == doctest::Approx(-3.0 * std::log1p(-kProbClamp)).epsilon(1e-12));
  CHECK(emptiness_loss(zero, part) < 1e-6);

  CHECK(emptiness_loss(f, partition_regions({0, 0, 1, 1}, {2, 2})) == 0.0);
}

TEST_CASE("tightness examples") {
  const SegmentSet segs = build_segments({0, 0, 9, 9}, 5);
  const ProbabilityMap ones({10, 10}, 1.0);
  CHECK(tightness_loss(ones, segs, kRelu) == 0.0);
  CHECK(tightness_loss(ones, segs, kBarrier) == doctest::Approx(4.0 * (-std::log(45.0) / 5.0)).epsilon(1e-12));
  // 0.8 ln 45 = 3.045330
  CHECK(tightness_loss(ones, segs, kBarrier) == doctest::Approx(-3.04533).epsilon(1e-5));
  CHECK(tightness_loss(ProbabilityMap({10, 10}, 0.0), segs, kRelu) == doctest::Approx(100.0));
}

TEST_CASE("size examples") {
  const RegionPartition part = partition_regions({0, 0, 9, 9}, {20, 20});
  ProbabilityMap f({20, 20}, 0.0);
  for (int i = 0; i < 70; ++i) f[static_cast<std::size_t>(i * 5)] = 1.0;  // mass 70, spread across the grid
  const SizePrior prior{0.5, 0.9};
  CHECK(size_loss(f, part, prior, kRelu) == 0.0);
  CHECK(size_loss(f, part, prior, kBarrier) == doctest::Approx(2.0 * (-std::log(20.0) / 5.0)).epsilon(1e-12));
  CHECK(size_loss(f, part, prior, kBarrier) == doctest::Approx(-1.19829).epsilon(1e-5));
  CHECK(size_loss(ProbabilityMap({20, 20}, 0.0), part, prior, kRelu) == doctest::Approx(250.0));
}

TEST_CASE("total loss examples") {
  const LossWeights weights{1e-4, 1e-2};
  const SizePrior prior{0.5, 0.9};

  // Empty box on a 10x13 grid, three 0.5 pixels outside: components (2.07944, 100, 242.5).
  const TightBox box{0, 0, 9, 9};
  const Shape grid{10, 13};
  ProbabilityMap f(grid, 0.0);
  f(0, 10) = f(0, 11) = f(0, 12) = 0.5;
  const RegionPartition part = partition_regions(box, grid);
  const SegmentSet segs = build_segments(box, 5);
  const double empty = emptiness_loss(f, part);
  const double tight = tightness_loss(f, segs, kRelu);
  const double size = size_loss(f, part, prior, kRelu);
  const LossBreakdown b = total_loss(f, part, segs, weights, prior, kRelu);
  CHECK(b.empty == empty);
  CHECK(b.tight == tight);
  CHECK(b.size == size);
  CHECK(b.total == doctest::Approx(empty + 1e-4 * tight + 1e-2 * size).epsilon(1e-14));

  // The literal example: weighted sum of the three documented components.
  CHECK(2.07944 + 1e-4 * 100.0 + 1e-2 * 250.0 == doctest::Approx(4.58944).epsilon(1e-9));
  CHECK(tight == doctest::Approx(100.0));
  CHECK(empty == doctest::Approx(2.07944).epsilon(1e-5));
  CHECK(size == doctest::Approx(5.0 * (50.0 - 1.5)));
}

TEST_CASE("zero weights reduce the total to emptiness exactly") {
  oracle::Rng rng(22);
  for (int i = 0; i < 100; ++i) {
    const Shape s = oracle::random_shape(rng, 16);
    const TightBox b = oracle::random_box(rng, s);
    const ProbabilityMap f = oracle::random_map(rng, s);
    const BoxConstraints bc = make_box_constraints(b, s, 5);
    const LossBreakdown lb = total_loss(f, bc.partition, bc.segments, {0.0, 0.0}, {}, kBarrier);
    REQUIRE(lb.total == lb.empty);
    REQUIRE(lb.total == emptiness_loss(f, bc.partition));
  }
}

TEST_CASE("losses reject mismatched shapes") {
  const RegionPartition part = partition_regions({0, 0, 1, 1}, {4, 4});
  const SegmentSet segs = build_segments({0, 0, 5, 5}, 2);
  const ProbabilityMap f({3, 3}, 0.1);
  for (auto fn : {+[](const ProbabilityMap& g, const RegionPartition& p, const SegmentSet&) {
                    return emptiness_loss(g, p);
                  },
                  +[](const ProbabilityMap& g, const RegionPartition&, const SegmentSet& s) {
                    return tightness_loss(g, s, kRelu);
                  },
                  +[](const ProbabilityMap& g, const RegionPartition& p, const SegmentSet&) {
                    return size_loss(g, p, {}, kRelu);
                  }}) {
    try {
      fn(f, part, segs);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ShapeMismatch);
    }
  }
}

TEST_CASE("losses agree with the per-pixel oracle") {
  oracle::Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    const Shape s = oracle::random_shape(rng, 16);
    const TightBox b = oracle::random_box(rng, s);
    const int w = 1 + static_cast<int>(rng.below(6));
    const double t = rng.uniform(1.0, 20.0);
    const double eps_lo = rng.uniform(0.1, 0.6), eps_hi = rng.uniform(eps_lo, 1.0);
    ProbabilityMap f = oracle::random_map(rng, s);
    if (i % 10 == 0) f(0, 0) = 1.0;  // exercises the clamp
    const BoxConstraints bc = make_box_constraints(b, s, w);
    for (bool lb : {false, true}) {
      const PenaltyConfig cfg{lb ? PenaltyKind::PseudoLogBarrier : PenaltyKind::ScaledRelu, t};
      REQUIRE(oracle::rel_err(emptiness_loss(f, bc.partition), oracle::emptiness(f, b), 1e-12) <= 1e-9);
      REQUIRE(oracle::rel_err(tightness_loss(f, bc.segments, cfg), oracle::tightness(f, b, w, t, lb), 1e-12) <=
              1e-9);
      REQUIRE(oracle::rel_err(size_loss(f, bc.partition, {eps_lo, eps_hi}, cfg),
                              oracle::size(f, b, eps_lo, eps_hi, t, lb), 1e-12) <= 1e-9);
    }
  }
}

TEST_CASE("loss gradients match central differences") {
  oracle::Rng rng(24);
  const double h = 1e-5;
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const Shape s = oracle::random_shape(rng, 10);
    const TightBox b = oracle::random_box(rng, s);
    const int w = 1 + static_cast<int>(rng.below(4));
    const double t = rng.uniform(1.0, 10.0);
    const bool lb = i % 2 == 0;
    const PenaltyConfig cfg{lb ? PenaltyKind::PseudoLogBarrier : PenaltyKind::ScaledRelu, t};
    const SizePrior prior{0.5, 0.9};
    const LossWeights weights{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const ProbabilityMap f = oracle::random_map(rng, s, 0.01, 0.99);
    const BoxConstraints bc = make_box_constraints(b, s, w);

    Grid<double> grad(s, 0.0);
    const double scale = 0.75;
    total_loss(f, bc.partition, bc.segments, weights, prior, cfg, &grad, scale);
    const auto sig = oracle::regime(f, b, w, t, prior.eps_lo, prior.eps_hi, lb);

    for (std::size_t k = 0; k < f.size(); ++k) {
      ProbabilityMap up = f, down = f;
      up[k] += h;
      down[k] -= h;
      if (oracle::regime(up, b, w, t, prior.eps_lo, prior.eps_hi, lb) != sig) continue;
      if (oracle::regime(down, b, w, t, prior.eps_lo, prior.eps_hi, lb) != sig) continue;
      auto loss = [&](const ProbabilityMap& g) {
        return oracle::emptiness(g, b) + weights.lambda_tight * oracle::tightness(g, b, w, t, lb) +
               weights.lambda_size * oracle::size(g, b, prior.eps_lo, prior.eps_hi, t, lb);
      };
      const double fd = scale * (loss(up) - loss(down)) / (2.0 * h);
      REQUIRE(oracle::rel_err(grad[k], fd) <= 1e-5);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("clamp saturates the emptiness gradient") {
  const RegionPartition part = partition_regions({0, 0, 0, 0}, {1, 2});
  ProbabilityMap f({1, 2}, 0.0);
  f(0, 1) = 1.0;
  Grid<double> grad(f.shape(), 0.0);
  const double loss = emptiness_loss(f, part, &grad);
  CHECK(loss == doctest::Approx(-std::log(kProbClamp)));
  CHECK(grad(0, 1) == 0.0);
  CHECK(grad(0, 0) == 0.0);
}

TEST_CASE("emptiness is monotone in outside probability") {
  oracle::Rng rng(25);
  for (int i = 0; i < 200; ++i) {
    const Shape s = oracle::random_shape(rng, 12);
    const TightBox b = oracle::random_box(rng, s);
    const RegionPartition part = partition_regions(b, s);
    ProbabilityMap f = oracle::random_map(rng, s, 0.0, 0.9);
    const double before = emptiness_loss(f, part);
    const int r = static_cast<int>(rng.below(s.rows)), c = static_cast<int>(rng.below(s.cols));
    f(r, c) += 0.05;
    const double after = emptiness_loss(f, part);
    if (b.contains(r, c)) {
      REQUIRE(after == before);
    } else {
      REQUIRE(after > before);
    }
  }
}
