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

#ifndef PIXCLUST_FEATURE_PREP_HPP
#define PIXCLUST_FEATURE_PREP_HPP

#include <optional>
#include <string>
#include <vector>

#include "pixclust/error.hpp"
#include "pixclust/types.hpp"

namespace pixclust {

enum class GridPolicy { Largest, Smallest, Explicit };

/// Which tensors to stack, on which spatial grid, and whether to z-score
/// each channel before stacking.
struct FeatureRecipe {
  std::string id;
  std::vector<std::string> sources;
  GridPolicy grid = GridPolicy::Largest;
  Index explicit_h = 0;
  Index explicit_w = 0;
  bool standardize = true;
};

/// Bilinear resize with half-pixel sample centres, source coordinates
/// clamped to the edge. Same-size resizes return the input unchanged.
FeatureTensor resample_bilinear(const FeatureTensor& tensor, Index target_h, Index target_w);

/// Per-channel z-score with population sigma; constant channels become 0.
FeatureTensor standardize_channels(const FeatureTensor& tensor);

/// Resolves the recipe's target grid against the given inputs.
std::pair<Index, Index> target_grid(const FeatureRecipe& recipe,
                                    const std::vector<FeatureTensor>& tensors);

/// Resample -> (standardize) -> concatenate along channels -> flatten.
/// `tensors` are in recipe order.
PixelMatrix concat_features(const FeatureRecipe& recipe, const std::vector<FeatureTensor>& tensors);

/// Inverse of the flattening done by concat_features.
FeatureTensor unflatten(const PixelMatrix& matrix);

}  // namespace pixclust

#endif  // PIXCLUST_FEATURE_PREP_HPP
