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

#include "boxprompt/provider.hpp"

#include "boxprompt/cache.hpp"

namespace boxprompt {

EmbeddingProvider::EmbeddingProvider(const Backbone& backbone, double input_scale, Mode mode,
                                     std::filesystem::path cache_dir)
    : backbone_(backbone), input_scale_(input_scale), mode_(mode), cache_dir_(std::move(cache_dir)) {
  if (mode_ == Mode::Disk && cache_dir_.empty()) {
    fail(ErrorKind::InvalidConfig, "disk embedding cache needs a directory");
  }
}

ModelInput EmbeddingProvider::model_input(const Sample& sample) const {
  return to_model_input(sample.image, backbone_.shape_spec().input_size, input_scale_);
}

ImageEmbedding EmbeddingProvider::get(const Sample& sample) {
  switch (mode_) {
    case Mode::Recompute: {
      ImageEmbedding emb = backbone_.encode_image(model_input(sample), sample.id);
      std::lock_guard lock(mu_);
      ++stats_.encodes;
      return emb;
    }
    case Mode::Memory: {
      {
        std::lock_guard lock(mu_);
        if (auto it = memo_.find(sample.id); it != memo_.end()) {
          ++stats_.hits;
          return it->second;
        }
      }
      ImageEmbedding emb = backbone_.encode_image(model_input(sample), sample.id);
      std::lock_guard lock(mu_);
      ++stats_.encodes;
      memo_.emplace(sample.id, emb);
      return emb;
    }
    case Mode::Disk: {
      if (auto cached = cache_lookup(cache_dir_, sample.id, backbone_.fingerprint())) {
        std::lock_guard lock(mu_);
        ++stats_.hits;
        return *cached;
      }
      ImageEmbedding emb = backbone_.encode_image(model_input(sample), sample.id);
      const CachePut put = cache_put(cache_dir_, emb);
      std::lock_guard lock(mu_);
      ++stats_.encodes;
      if (put == CachePut::Written) ++stats_.writes;
      return emb;
    }
  }
  fail(ErrorKind::InternalInvariant, "unknown embedding provider mode");
}

EmbeddingProvider::Stats EmbeddingProvider::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace boxprompt
