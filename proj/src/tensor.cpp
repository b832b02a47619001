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

#include "boxprompt/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace boxprompt {

Tensor& ParameterSet::at(const std::string& name) {
  for (auto& a : arrays) {
    if (a.name == name) return a;
  }
  fail(ErrorKind::FormatError, "no parameter array named '" + name + "'");
}

const Tensor& ParameterSet::at(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::all_finite() const {
  return std::all_of(arrays.begin(), arrays.end(), [](const Tensor& a) {
    return std::all_of(a.values.begin(), a.values.end(), [](double v) { return std::isfinite(v); });
  });
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.arrays.reserve(arrays.size());
  for (const auto& a : arrays) out.arrays.emplace_back(a.name, a.dims);
  return out;
}

}  // namespace boxprompt
