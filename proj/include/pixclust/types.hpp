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

#ifndef PIXCLUST_TYPES_HPP
#define PIXCLUST_TYPES_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pixclust {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/*
 * A matrix whose rows flatten a spatial grid, row index = h * grid_w + w.
 *
 * Pixel features (float) and principal-component scores (double) share this
 * layout, so the clustering and quality code accepts either.
 */
template <typename Scalar>
struct GridMatrix {
  using ScalarType = Scalar;

  Index grid_h = 0;
  Index grid_w = 0;
  RowMatrix<Scalar> values;

  GridMatrix() = default;
  GridMatrix(Index h, Index w, RowMatrix<Scalar> v)
      : grid_h(h), grid_w(w), values(std::move(v)) {}

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

/// N x C pixel features feeding PCA.
using PixelMatrix = GridMatrix<float>;

/// N x K projection scores (the principal-component maps).
using PcMaps = GridMatrix<double>;

/// H x W x C activation grid. `data` is (H*W) x C row-major, which is exactly
/// the HWC element order.
struct FeatureTensor {
  Index height = 0;
  Index width = 0;
  Index channels = 0;
  RowMatrix<float> data;
  std::map<std::string, std::string> meta;

  FeatureTensor() = default;
  FeatureTensor(Index h, Index w, Index c)
      : height(h), width(w), channels(c), data(RowMatrix<float>::Zero(h * w, c)) {}

  float& at(Index h, Index w, Index c) { return data(h * width + w, c); }
  float at(Index h, Index w, Index c) const { return data(h * width + w, c); }
};

inline constexpr int kMaxLabel = 254;

/// Per-pixel labels in [0, 254]; 255 is reserved.
struct LabelMap {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(Index h, Index w, std::uint8_t fill = 0)
      : height(h), width(w), labels(static_cast<std::size_t>(h * w), fill) {}

  std::uint8_t& at(Index h, Index w) { return labels[static_cast<std::size_t>(h * width + w)]; }
  std::uint8_t at(Index h, Index w) const { return labels[static_cast<std::size_t>(h * width + w)]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

}  // namespace pixclust

#endif  // PIXCLUST_TYPES_HPP
