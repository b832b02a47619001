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

#include "boxprompt/cache.hpp"

#include <atomic>
#include <fstream>
#include <system_error>

#include <unistd.h>

#include "binio.hpp"
#include "boxprompt/hash.hpp"

namespace boxprompt {

namespace fs = std::filesystem;

std::string cache_key(const std::string& source_id, const std::string& fingerprint) {
  Sha256 h;
  h.update(source_id);
  h.update(std::string_view("\0", 1));
  h.update(fingerprint);
  return h.hex();
}

fs::path cache_path(const fs::path& dir, const std::string& key) { return dir / (key + ".pemb"); }

void write_embedding_file(const fs::path& path, const ImageEmbedding& emb) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::IOFailure, "cannot open " + path.string() + " for writing");
  os.write("PEMB1", 5);
  binio::put_u32(os, static_cast<std::uint32_t>(emb.channels));
  binio::put_u32(os, static_cast<std::uint32_t>(emb.grid.rows));
  binio::put_u32(os, static_cast<std::uint32_t>(emb.grid.cols));
  for (float v : emb.values) binio::put_f32(os, v);
  binio::put_string(os, emb.fingerprint);
  os.flush();
  if (!os) fail(ErrorKind::IOFailure, "write failed for " + path.string());
}

ImageEmbedding read_embedding_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::IOFailure, "cannot open " + path.string());
  binio::expect_magic(is, "PEMB1");
  ImageEmbedding emb;
  emb.channels = static_cast<int>(binio::get_u32(is));
  emb.grid.rows = static_cast<int>(binio::get_u32(is));
  emb.grid.cols = static_cast<int>(binio::get_u32(is));
  const std::size_t n = static_cast<std::size_t>(emb.channels) * emb.grid.size();
  if (n > (std::size_t{1} << 32)) fail(ErrorKind::FormatError, "embedding dims too large in " + path.string());
  emb.values.resize(n);
  for (float& v : emb.values) v = binio::get_f32(is);
  emb.fingerprint = binio::get_string(is);
  return emb;
}

CachePut cache_put(const fs::path& dir, const ImageEmbedding& emb) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IOFailure, "cannot create cache directory " + dir.string() + ": " + ec.message());
  const std::string key = cache_key(emb.source_id, emb.fingerprint);
  const fs::path final_path = cache_path(dir, key);
  if (fs::exists(final_path)) {
    ImageEmbedding stored = read_embedding_file(final_path);
    stored.source_id = emb.source_id;
    if (stored == emb) return CachePut::AlreadyPresent;
    fail(ErrorKind::CacheConflict, "cache entry " + key + " already holds a different payload");
  }
  static std::atomic<unsigned> counter{0};
  const fs::path tmp = dir / (key + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++));
  write_embedding_file(tmp, emb);
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::IOFailure, "cannot publish cache entry " + final_path.string());
  }
  return CachePut::Written;
}

std::optional<CacheEntry> cache_get(const fs::path& dir, const std::string& key) {
  const fs::path p = cache_path(dir, key);
  if (!fs::exists(p)) return std::nullopt;
  return CacheEntry{key, read_embedding_file(p)};
}

std::optional<ImageEmbedding> cache_lookup(const fs::path& dir, const std::string& source_id,
                                           const std::string& fingerprint) {
  auto entry = cache_get(dir, cache_key(source_id, fingerprint));
  if (!entry) return std::nullopt;
  if (entry->payload.fingerprint != fingerprint) {
    fail(ErrorKind::CacheConflict, "cache entry for '" + source_id + "' was written by backbone " +
                                       entry->payload.fingerprint);
  }
  entry->payload.source_id = source_id;
  return std::move(entry->payload);
}

}  // namespace boxprompt
