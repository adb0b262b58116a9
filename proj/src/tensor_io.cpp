// Copyright 2026 The pixclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pixclust/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <string>

#include <png.h>

#include "json.hpp"

namespace pixclust {

namespace {

constexpr char kMagic[4] = {'F', 'T', 'Z', '1'};
constexpr std::size_t kPreambleSize = 8;

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::int64_t shape_dim(const nlohmann::json& v) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw Error(Errc::HeaderMismatch, "shape entries must be integers");
  }
  const auto d = v.get<std::int64_t>();
  if (d < 1) throw Error(Errc::HeaderMismatch, "shape entries must be >= 1");
  return d;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::IoFailure, "read failed: " + path.string());
  return bytes;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return f;
}

// libpng reports errors through longjmp. The setjmp frames below hold only
// trivially destructible locals; all allocation happens in the callers.

struct PngHeader {
  png_uint_32 width;
  png_uint_32 height;
  int bit_depth;
  int color_type;
};

bool png_read_header(png_structp png, png_infop info, std::FILE* fp, PngHeader* hdr) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_read_info(png, info);
  png_get_IHDR(png, info, &hdr->width, &hdr->height, &hdr->bit_depth, &hdr->color_type,
               nullptr, nullptr, nullptr);
  return true;
}

bool png_read_pixels(png_structp png, png_infop info, int bit_depth, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  if (bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

bool png_write_gray(png_structp png, png_infop info, std::FILE* fp, png_uint_32 width,
                    png_uint_32 height, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

void validate_tensor(const FeatureTensor& t) {
  if (t.height < 1 || t.width < 1 || t.channels < 1) {
    throw Error(Errc::InvalidArgument, "tensor dimensions must be >= 1");
  }
  if (t.data.rows() != t.height * t.width || t.data.cols() != t.channels) {
    throw Error(Errc::InvalidArgument, "tensor data does not match H*W x C");
  }
  if (!t.data.allFinite()) throw Error(Errc::NonFinite, "tensor contains NaN or Inf");
}

std::vector<std::uint8_t> encode_ftz(const FeatureTensor& tensor) {
  validate_tensor(tensor);

  nlohmann::json header;
  header["dtype"] = "f32";
  header["layout"] = "HWC";
  header["shape"] = {tensor.height, tensor.width, tensor.channels};
  if (!tensor.meta.empty()) header["meta"] = tensor.meta;
  const std::string text = header.dump();
  if (text.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::InvalidArgument, "FTZ header too large");
  }

  const auto count = static_cast<std::size_t>(tensor.data.size());
  std::vector<std::uint8_t> out;
  out.reserve(kPreambleSize + text.size() + 4 * count);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());

  const float* values = tensor.data.data();
  for (std::size_t i = 0; i < count; ++i) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(values[i]));
  }
  return out;
}

FeatureTensor decode_ftz(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::BadMagic, "not an FTZ1 file");
  }
  if (bytes.size() < kPreambleSize) throw Error(Errc::HeaderMismatch, "truncated preamble");
  const std::uint64_t header_len = get_u32_le(bytes.data() + 4);
  if (header_len > bytes.size() - kPreambleSize) {
    throw Error(Errc::HeaderMismatch, "header length exceeds file size");
  }

  const auto* header_begin = reinterpret_cast<const char*>(bytes.data() + kPreambleSize);
  nlohmann::json header = nlohmann::json::parse(header_begin, header_begin + header_len,
                                                nullptr, /*allow_exceptions=*/false);
  if (header.is_discarded() || !header.is_object()) {
    throw Error(Errc::HeaderMismatch, "header is not a JSON object");
  }
  if (!header.contains("dtype") || header["dtype"] != "f32") {
    throw Error(Errc::HeaderMismatch, "dtype must be \"f32\"");
  }
  if (!header.contains("layout") || header["layout"] != "HWC") {
    throw Error(Errc::HeaderMismatch, "layout must be \"HWC\"");
  }
  if (!header.contains("shape") || !header["shape"].is_array() || header["shape"].size() != 3) {
    throw Error(Errc::HeaderMismatch, "shape must be [H, W, C]");
  }
  const std::int64_t h = shape_dim(header["shape"][0]);
  const std::int64_t w = shape_dim(header["shape"][1]);
  const std::int64_t c = shape_dim(header["shape"][2]);

  const std::uint64_t payload = bytes.size() - kPreambleSize - header_len;
  const std::uint64_t limit = payload / 4 + 1;
  if (static_cast<std::uint64_t>(h) > limit || static_cast<std::uint64_t>(w) > limit ||
      static_cast<std::uint64_t>(c) > limit ||
      static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w) > limit ||
      static_cast<std::uint64_t>(h * w) * static_cast<std::uint64_t>(c) * 4 != payload) {
    throw Error(Errc::HeaderMismatch, "payload length does not match declared shape");
  }

  FeatureTensor tensor(h, w, c);
  if (header.contains("meta")) {
    const auto& meta = header["meta"];
    if (!meta.is_object()) throw Error(Errc::HeaderMismatch, "meta must be an object");
    for (const auto& [key, value] : meta.items()) {
      if (!value.is_string()) throw Error(Errc::HeaderMismatch, "meta values must be strings");
      tensor.meta.emplace(key, value.get<std::string>());
    }
  }

  const std::uint8_t* src = bytes.data() + kPreambleSize + header_len;
  float* dst = tensor.data.data();
  const auto count = static_cast<std::size_t>(h * w * c);
  for (std::size_t i = 0; i < count; ++i) {
    dst[i] = std::bit_cast<float>(get_u32_le(src + 4 * i));
  }
  if (!tensor.data.allFinite()) throw Error(Errc::NonFinite, "payload contains NaN or Inf");
  return tensor;
}

FeatureTensor read_ftz(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_ftz(bytes);
}

void write_ftz(const FeatureTensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_ftz(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

LabelMap read_label_png(const std::filesystem::path& path) {
  FilePtr fp = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(Errc::UnsupportedPng, "not a PNG file: " + path.string());
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::IoFailure, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::IoFailure, "png_create_info_struct failed");
  }
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};

  png_set_sig_bytes(png, 8);
  PngHeader hdr{};
  if (!png_read_header(png, info, fp.get(), &hdr)) {
    throw Error(Errc::IoFailure, "corrupt PNG header: " + path.string());
  }
  if (hdr.color_type != PNG_COLOR_TYPE_GRAY || hdr.bit_depth > 8) {
    throw Error(Errc::UnsupportedPng,
                "label maps must be 8-bit single-channel grayscale: " + path.string());
  }

  LabelMap map(static_cast<Index>(hdr.height), static_cast<Index>(hdr.width));
  std::vector<png_bytep> rows(hdr.height);
  for (png_uint_32 r = 0; r < hdr.height; ++r) {
    rows[r] = map.labels.data() + static_cast<std::size_t>(r) * hdr.width;
  }
  if (!png_read_pixels(png, info, hdr.bit_depth, rows.data())) {
    throw Error(Errc::IoFailure, "corrupt PNG data: " + path.string());
  }
  for (auto v : map.labels) {
    if (v > kMaxLabel) {
      throw Error(Errc::LabelOutOfRange, "label 255 is reserved: " + path.string());
    }
  }
  return map;
}

void write_gray_png(Index height, Index width, std::span<const std::uint8_t> pixels,
                    const std::filesystem::path& path) {
  if (height < 1 || width < 1 || pixels.size() != static_cast<std::size_t>(height * width)) {
    throw Error(Errc::InvalidArgument, "image buffer does not match dimensions");
  }
  FilePtr fp = open_file(path, "wb");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::IoFailure, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::IoFailure, "png_create_info_struct failed");
  }
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};

  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (Index r = 0; r < height; ++r) {
    rows[static_cast<std::size_t>(r)] =
        const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r * width));
  }
  if (!png_write_gray(png, info, fp.get(), static_cast<png_uint_32>(width),
                      static_cast<png_uint_32>(height), rows.data())) {
    throw Error(Errc::IoFailure, "PNG encoding failed: " + path.string());
  }
  if (std::fflush(fp.get()) != 0) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

void write_label_png(const LabelMap& map, const std::filesystem::path& path) {
  if (map.labels.size() != static_cast<std::size_t>(map.height * map.width)) {
    throw Error(Errc::InvalidArgument, "label buffer does not match dimensions");
  }
  for (auto v : map.labels) {
    if (v > kMaxLabel) throw Error(Errc::LabelOutOfRange, "label 255 is reserved");
  }
  write_gray_png(map.height, map.width, map.labels, path);
}

}  // namespace pixclust
