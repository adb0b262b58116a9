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

#include "pixclust/feature_prep.hpp"
#include "pixclust/tensor_io.hpp"

#include <algorithm>
#include <cmath>

namespace pixclust {

namespace {

struct Tap {
  Index lo;
  Index hi;
  double frac;
};

// Source taps for each output coordinate along one axis.
std::vector<Tap> axis_taps(Index in, Index out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<Index>(std::floor(src));
    const Index hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

FeatureTensor resample_bilinear(const FeatureTensor& tensor, Index target_h, Index target_w) {
  if (target_h < 1 || target_w < 1) {
    throw Error(Errc::InvalidArgument, "resample target must be at least 1x1");
  }
  if (target_h == tensor.height && target_w == tensor.width) return tensor;

  const auto ty = axis_taps(tensor.height, target_h);
  const auto tx = axis_taps(tensor.width, target_w);
  const Index channels = tensor.channels;

  FeatureTensor out(target_h, target_w, channels);
  out.meta = tensor.meta;
  for (Index y = 0; y < target_h; ++y) {
    const Tap& vy = ty[static_cast<std::size_t>(y)];
    for (Index x = 0; x < target_w; ++x) {
      const Tap& vx = tx[static_cast<std::size_t>(x)];
      const auto r00 = tensor.data.row(vy.lo * tensor.width + vx.lo).cast<double>();
      const auto r01 = tensor.data.row(vy.lo * tensor.width + vx.hi).cast<double>();
      const auto r10 = tensor.data.row(vy.hi * tensor.width + vx.lo).cast<double>();
      const auto r11 = tensor.data.row(vy.hi * tensor.width + vx.hi).cast<double>();
      const auto top = (1.0 - vx.frac) * r00 + vx.frac * r01;
      const auto bottom = (1.0 - vx.frac) * r10 + vx.frac * r11;
      out.data.row(y * target_w + x) = ((1.0 - vy.frac) * top + vy.frac * bottom).cast<float>();
    }
  }
  return out;
}

FeatureTensor standardize_channels(const FeatureTensor& tensor) {
  FeatureTensor out = tensor;
  const Index n = tensor.data.rows();
  for (Index c = 0; c < tensor.channels; ++c) {
    auto column = tensor.data.col(c);
    if (column.maxCoeff() == column.minCoeff()) {
      out.data.col(c).setZero();
      continue;
    }
    // Fixed-order accumulation in double.
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) sum += column(i);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double d = column(i) - mean;
      ss += d * d;
    }
    const double sigma = std::sqrt(ss / static_cast<double>(n));
    if (!(sigma > 0.0)) {
      out.data.col(c).setZero();
      continue;
    }
    for (Index i = 0; i < n; ++i) {
      out.data(i, c) = static_cast<float>((column(i) - mean) / sigma);
    }
  }
  return out;
}

std::pair<Index, Index> target_grid(const FeatureRecipe& recipe,
                                    const std::vector<FeatureTensor>& tensors) {
  if (tensors.empty()) throw Error(Errc::EmptyRecipe, "recipe '" + recipe.id + "' has no tensors");
  switch (recipe.grid) {
    case GridPolicy::Explicit:
      if (recipe.explicit_h < 1 || recipe.explicit_w < 1) {
        throw Error(Errc::InvalidArgument, "explicit grid must be at least 1x1");
      }
      return {recipe.explicit_h, recipe.explicit_w};
    case GridPolicy::Smallest: {
      const auto it = std::min_element(tensors.begin(), tensors.end(), [](const auto& a, const auto& b) {
        return a.height * a.width < b.height * b.width;
      });
      return {it->height, it->width};
    }
    case GridPolicy::Largest:
      break;
  }
  // First of the largest on ties.
  const FeatureTensor* best = &tensors.front();
  for (const auto& t : tensors) {
    if (t.height * t.width > best->height * best->width) best = &t;
  }
  return {best->height, best->width};
}

PixelMatrix concat_features(const FeatureRecipe& recipe, const std::vector<FeatureTensor>& tensors) {
  const auto [grid_h, grid_w] = target_grid(recipe, tensors);

  Index total_channels = 0;
  for (const auto& t : tensors) {
    validate_tensor(t);
    total_channels += t.channels;
  }

  PixelMatrix matrix(grid_h, grid_w, RowMatrix<float>(grid_h * grid_w, total_channels));
  Index offset = 0;
  for (const auto& t : tensors) {
    FeatureTensor aligned = resample_bilinear(t, grid_h, grid_w);
    if (recipe.standardize) aligned = standardize_channels(aligned);
    matrix.values.middleCols(offset, t.channels) = aligned.data;
    offset += t.channels;
  }
  return matrix;
}

FeatureTensor unflatten(const PixelMatrix& matrix) {
  FeatureTensor t;
  t.height = matrix.grid_h;
  t.width = matrix.grid_w;
  t.channels = matrix.cols();
  t.data = matrix.values;
  return t;
}

}  // namespace pixclust
