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

#include "boxprompt/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include <png.h>
#include <zlib.h>

namespace boxprompt {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void write_png_rows(const fs::path& path, int rows, int cols, int depth, const std::vector<png_bytep>& row_ptrs) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorKind::IOFailure, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::IOFailure, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::IOFailure, "libpng write error on " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  png_write_image(png, const_cast<png_bytepp>(row_ptrs.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Grid<float> read_png(const fs::path& path, int* bit_depth) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(ErrorKind::IOFailure, "cannot open image " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorKind::FormatError, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::IOFailure, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::FormatError, "corrupt PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);
  const int rows = static_cast<int>(png_get_image_height(png, info));
  const int cols = static_cast<int>(png_get_image_width(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buf(rowbytes * static_cast<std::size_t>(rows));
  std::vector<png_bytep> ptrs(rows);
  for (int r = 0; r < rows; ++r) ptrs[r] = buf.data() + rowbytes * r;
  png_read_image(png, ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Grid<float> img({rows, cols});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, ptrs[r] + 2 * c, 2);
        img(r, c) = v;
      } else {
        img(r, c) = ptrs[r][c];
      }
    }
  }
  if (bit_depth != nullptr) *bit_depth = depth;
  return img;
}

void write_png8(const fs::path& path, const Grid<std::uint8_t>& image) {
  std::vector<png_bytep> ptrs(image.rows());
  auto* base = const_cast<std::uint8_t*>(image.storage().data());
  for (int r = 0; r < image.rows(); ++r) ptrs[r] = base + image.index(r, 0);
  write_png_rows(path, image.rows(), image.cols(), 8, ptrs);
}

void write_png16(const fs::path& path, const Grid<std::uint16_t>& image) {
  std::vector<png_bytep> ptrs(image.rows());
  auto* base = const_cast<std::uint16_t*>(image.storage().data());
  for (int r = 0; r < image.rows(); ++r) ptrs[r] = reinterpret_cast<png_bytep>(base + image.index(r, 0));
  write_png_rows(path, image.rows(), image.cols(), 16, ptrs);
}

Mask read_mask_png(const fs::path& path) {
  const Grid<float> g = read_png(path);
  Mask m(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = g[i] != 0.0f ? 1 : 0;
  return m;
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  Grid<std::uint8_t> out(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] != 0 ? 255 : 0;
  write_png8(path, out);
}

Grid<float> Volume::slice(int z) const {
  if (z < 0 || z >= nz) fail(ErrorKind::ShapeMismatch, "slice index out of range");
  Grid<float> g({ny, nx});
  const std::size_t plane = static_cast<std::size_t>(nx) * ny;
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(plane * z), plane, g.storage().begin());
  return g;
}

namespace {

// NIfTI-1 header field offsets.
constexpr int kHeaderSize = 348;
constexpr int kDimOffset = 40;
constexpr int kDatatypeOffset = 70;
constexpr int kPixdimOffset = 76;
constexpr int kVoxOffset = 108;
constexpr int kSlopeOffset = 112;
constexpr int kInterOffset = 116;
constexpr int kMagicOffset = 344;

template <typename T>
T load(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f != nullptr) gzclose(f);
  }
};

}  // namespace

bool is_nifti_path(const fs::path& path) {
  const std::string s = path.string();
  auto ends_with = [&](const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends_with(".nii") || ends_with(".nii.gz");
}

Volume read_nifti(const fs::path& path) {
  std::unique_ptr<gzFile_s, GzCloser> gz(gzopen(path.c_str(), "rb"));
  if (!gz) fail(ErrorKind::IOFailure, "cannot open volume " + path.string());
  unsigned char hdr[kHeaderSize];
  if (gzread(gz.get(), hdr, kHeaderSize) != kHeaderSize) fail(ErrorKind::FormatError, "truncated NIfTI header");
  if (load<std::int32_t>(hdr) != kHeaderSize) {
    fail(ErrorKind::FormatError, path.string() + ": not a little-endian NIfTI-1 file");
  }
  if (std::memcmp(hdr + kMagicOffset, "n+1", 4) != 0) {
    fail(ErrorKind::FormatError, path.string() + ": only single-file NIfTI-1 (n+1) is supported");
  }
  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = load<std::int16_t>(hdr + kDimOffset + 2 * i);
  if (dim[0] < 2 || dim[0] > 4 || (dim[0] == 4 && dim[4] > 1)) {
    fail(ErrorKind::FormatError, path.string() + ": expected a 2-D or 3-D volume");
  }
  Volume vol;
  vol.nx = dim[1];
  vol.ny = dim[2];
  vol.nz = dim[0] >= 3 ? std::max<int>(1, dim[3]) : 1;
  if (vol.nx < 1 || vol.ny < 1) fail(ErrorKind::FormatError, path.string() + ": empty volume");
  for (int i = 0; i < 3; ++i) {
    const float p = load<float>(hdr + kPixdimOffset + 4 * (i + 1));
    vol.spacing[i] = p > 0.0f ? p : 1.0;
  }
  const std::int16_t datatype = load<std::int16_t>(hdr + kDatatypeOffset);
  const auto vox_offset = static_cast<long>(load<float>(hdr + kVoxOffset));
  float slope = load<float>(hdr + kSlopeOffset);
  const float inter = load<float>(hdr + kInterOffset);
  if (slope == 0.0f || !std::isfinite(slope)) slope = 1.0f;

  int bytes = 0;
  switch (datatype) {
    case 2: bytes = 1; break;     // uint8
    case 4: bytes = 2; break;     // int16
    case 8: bytes = 4; break;     // int32
    case 16: bytes = 4; break;    // float32
    case 64: bytes = 8; break;    // float64
    case 256: bytes = 1; break;   // int8
    case 512: bytes = 2; break;   // uint16
    default: fail(ErrorKind::FormatError, path.string() + ": unsupported NIfTI datatype " + std::to_string(datatype));
  }
  if (gzseek(gz.get(), vox_offset, SEEK_SET) < 0) fail(ErrorKind::FormatError, "bad vox_offset");
  const std::size_t n = static_cast<std::size_t>(vol.nx) * vol.ny * vol.nz;
  std::vector<unsigned char> raw(n * bytes);
  if (gzread(gz.get(), raw.data(), static_cast<unsigned>(raw.size())) != static_cast<int>(raw.size())) {
    fail(ErrorKind::FormatError, path.string() + ": truncated voxel data");
  }
  vol.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* p = raw.data() + i * bytes;
    double v = 0.0;
    switch (datatype) {
      case 2: v = *p; break;
      case 4: v = load<std::int16_t>(p); break;
      case 8: v = load<std::int32_t>(p); break;
      case 16: v = load<float>(p); break;
      case 64: v = load<double>(p); break;
      case 256: v = static_cast<std::int8_t>(*p); break;
      case 512: v = load<std::uint16_t>(p); break;
    }
    vol.data[i] = static_cast<float>(v * slope + inter);
  }
  return vol;
}

void write_nifti(const fs::path& path, const Volume& vol) {
  unsigned char hdr[kHeaderSize + 4] = {};
  auto store = [&](int off, auto v) { std::memcpy(hdr + off, &v, sizeof(v)); };
  store(0, std::int32_t{kHeaderSize});
  const std::int16_t dims[8] = {3, static_cast<std::int16_t>(vol.nx), static_cast<std::int16_t>(vol.ny),
                                static_cast<std::int16_t>(vol.nz), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store(kDimOffset + 2 * i, dims[i]);
  store(kDatatypeOffset, std::int16_t{16});
  store(72, std::int16_t{32});  // bitpix
  store(kPixdimOffset, 1.0f);
  for (int i = 0; i < 3; ++i) store(kPixdimOffset + 4 * (i + 1), static_cast<float>(vol.spacing[i]));
  store(kVoxOffset, 352.0f);
  store(kSlopeOffset, 1.0f);
  std::memcpy(hdr + kMagicOffset, "n+1", 4);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorKind::IOFailure, "cannot open " + path.string() + " for writing");
  std::fwrite(hdr, 1, sizeof(hdr), fp.get());
  std::fwrite(vol.data.data(), sizeof(float), vol.data.size(), fp.get());
  if (std::ferror(fp.get())) fail(ErrorKind::IOFailure, "write failed for " + path.string());
}

Grid<float> read_image_2d(const fs::path& path) {
  if (is_nifti_path(path)) {
    const Volume v = read_nifti(path);
    if (v.nz != 1) fail(ErrorKind::FormatError, path.string() + " is a 3-D volume; preprocess it into slices first");
    return v.slice(0);
  }
  return read_png(path);
}

}  // namespace boxprompt
