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

#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "boxprompt/error.hpp"

namespace boxprompt {

/// Named dense array of doubles, row-major over `dims`.
struct Tensor {
  std::string name;
  std::vector<int> dims;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::string n, std::vector<int> d)
      : name(std::move(n)), dims(std::move(d)), values(element_count(dims), 0.0) {}

  static std::size_t element_count(const std::vector<int>& d) {
    return std::accumulate(d.begin(), d.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }
  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

/// All trainable weights of a module, in a fixed order.
struct ParameterSet {
  std::vector<Tensor> arrays;

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& a : arrays) n += a.size();
    return n;
  }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool all_finite() const;

  /// Same names and dims, all values zero.
  ParameterSet zeros_like() const;
  bool operator==(const ParameterSet&) const = default;
};

}  // namespace boxprompt
