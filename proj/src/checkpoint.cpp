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

#include "boxprompt/checkpoint.hpp"

#include <fstream>

#include "binio.hpp"

namespace boxprompt {

namespace fs = std::filesystem;

void save_checkpoint(const fs::path& path, const PromptModule& module, const nlohmann::json& meta) {
  const nlohmann::json header = {{"format", "boxprompt-checkpoint"},
                                 {"module", module.config().to_json()},
                                 {"meta", meta}};
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::IOFailure, "cannot open " + tmp.string() + " for writing");
    os.write("BPCK", 4);
    binio::put_u32(os, kCheckpointVersion);
    binio::put_string(os, header.dump());
    const auto& arrays = module.parameters().arrays;
    binio::put_u32(os, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& a : arrays) {
      binio::put_string(os, a.name);
      binio::put_u32(os, static_cast<std::uint32_t>(a.dims.size()));
      for (int d : a.dims) binio::put_u32(os, static_cast<std::uint32_t>(d));
      for (double v : a.values) binio::put_f32(os, static_cast<float>(v));
    }
    if (!os) fail(ErrorKind::IOFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IOFailure, "cannot publish checkpoint " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::IOFailure, "cannot open checkpoint " + path.string());
  binio::expect_magic(is, "BPCK");
  const std::uint32_t version = binio::get_u32(is);
  if (version != kCheckpointVersion) {
    fail(ErrorKind::FormatError, "unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(binio::get_string(is));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, std::string("corrupt checkpoint header: ") + e.what());
  }
  const PromptModuleConfig cfg = PromptModuleConfig::from_json(header.at("module"));
  ParameterSet params;
  const std::uint32_t count = binio::get_u32(is);
  if (count > 1024) fail(ErrorKind::FormatError, "implausible parameter array count");
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = binio::get_string(is, 4096);
    const std::uint32_t ndims = binio::get_u32(is);
    if (ndims > 8) fail(ErrorKind::FormatError, "implausible tensor rank in checkpoint");
    for (std::uint32_t d = 0; d < ndims; ++d) t.dims.push_back(static_cast<int>(binio::get_u32(is)));
    const std::size_t n = Tensor::element_count(t.dims);
    if (n > (std::size_t{1} << 31)) fail(ErrorKind::FormatError, "tensor too large in checkpoint");
    t.values.resize(n);
    for (double& v : t.values) v = binio::get_f32(is);
    params.arrays.push_back(std::move(t));
  }
  return {PromptModule(cfg, std::move(params)), header.value("meta", nlohmann::json::object())};
}

}  // namespace boxprompt
