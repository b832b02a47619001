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

// On-disk embedding cache.
//
// One file per entry, named <key>.pemb, where key = sha256(source_id NUL
// fingerprint). File layout, all integers little-endian:
//
//   "PEMB1" | u32 channels | u32 rows | u32 cols |
//   float32[channels*rows*cols] row-major | u32 n | n bytes UTF-8 fingerprint

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "boxprompt/embedding.hpp"

namespace boxprompt {

struct CacheEntry {
  std::string key;
  ImageEmbedding payload;
};

enum class CachePut { Written, AlreadyPresent };

std::string cache_key(const std::string& source_id, const std::string& fingerprint);
std::filesystem::path cache_path(const std::filesystem::path& dir, const std::string& key);

void write_embedding_file(const std::filesystem::path& path, const ImageEmbedding& emb);
/// The returned embedding has an empty source_id (the format does not store it).
ImageEmbedding read_embedding_file(const std::filesystem::path& path);

/// Atomic write (temp file + rename). Re-putting an identical payload is a
/// no-op; a different payload under the same key is a CacheConflict.
CachePut cache_put(const std::filesystem::path& dir, const ImageEmbedding& emb);

std::optional<CacheEntry> cache_get(const std::filesystem::path& dir, const std::string& key);

/// Lookup by (source_id, fingerprint); a stored fingerprint that differs from
/// the expected one raises CacheConflict.
std::optional<ImageEmbedding> cache_lookup(const std::filesystem::path& dir, const std::string& source_id,
                                           const std::string& fingerprint);

}  // namespace boxprompt
