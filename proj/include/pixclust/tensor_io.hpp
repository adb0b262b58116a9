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

#ifndef PIXCLUST_TENSOR_IO_HPP
#define PIXCLUST_TENSOR_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pixclust/error.hpp"
#include "pixclust/types.hpp"

namespace pixclust {

/*
 * FTZ feature-tensor files:
 *
 *   bytes 0..3   "FTZ1"
 *   bytes 4..7   header length L, uint32 little-endian
 *   bytes 8..    L bytes of UTF-8 JSON:
 *                  {"dtype":"f32","layout":"HWC","meta":{...},"shape":[H,W,C]}
 *   remainder    H*W*C float32 little-endian, index ((h*W)+w)*C+c
 *
 * The writer emits keys in sorted order with no whitespace, so identical
 * tensors always produce identical bytes.
 */
std::vector<std::uint8_t> encode_ftz(const FeatureTensor& tensor);
FeatureTensor decode_ftz(std::span<const std::uint8_t> bytes);

FeatureTensor read_ftz(const std::filesystem::path& path);
void write_ftz(const FeatureTensor& tensor, const std::filesystem::path& path);

/// Throws InvalidArgument / NonFinite when the tensor breaks its invariants.
void validate_tensor(const FeatureTensor& tensor);

// Label maps travel as 8-bit single-channel grayscale PNG, pixel value ==
// label. Gray images with 1/2/4-bit depth are unpacked without rescaling.
LabelMap read_label_png(const std::filesystem::path& path);
void write_label_png(const LabelMap& map, const std::filesystem::path& path);

/// Writes an arbitrary 8-bit grayscale image (used for PC-map previews).
void write_gray_png(Index height, Index width, std::span<const std::uint8_t> pixels,
                    const std::filesystem::path& path);

}  // namespace pixclust

#endif  // PIXCLUST_TENSOR_IO_HPP
