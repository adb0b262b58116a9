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

#ifndef PIXCLUST_PIPELINE_HPP
#define PIXCLUST_PIPELINE_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pixclust/clustering.hpp"
#include "pixclust/error.hpp"
#include "pixclust/feature_prep.hpp"
#include "pixclust/pca.hpp"
#include "pixclust/quality.hpp"
#include "pixclust/types.hpp"

namespace pixclust {

struct RunConfig {
  double t_eig = kDefaultEigenRatio;
  double t_sil = kDefaultSilhouetteThreshold;
  std::uint64_t seed = 0;
  std::vector<ClusterMethod> methods{ClusterMethod::KMeans, ClusterMethod::Hierarchical};
  std::optional<Index> k_override;
  Index n_max_silhouette = kDefaultSilhouetteMaxPoints;
  Index n_hier_max = kDefaultHierMaxPoints;
  bool standardize = true;
  Linkage linkage = Linkage::Ward;
  int max_iter = 300;
  double tol = 1e-4;

  /// Throws InvalidArgument unless 0 < t_eig < 1, -1 <= t_sil < 1 and at
  /// least one method is enabled.
  void validate() const;
};

/// Tensors by source name, as referenced from FeatureRecipe::sources.
using TensorStore = std::map<std::string, FeatureTensor>;

/// One recipe after PCA: its spectrum, K and the top-K PC maps.
struct Representation {
  std::string recipe_id;
  PcaModel<double> model;
  PcMaps pc_maps;
  Index k = 0;
  std::optional<std::string> error;

  bool ok() const { return !error; }
};

/// One (representation x method) clustering and its silhouette rate.
struct Candidate {
  std::string recipe_id;
  std::size_t representation = 0;
  ClusterMethod method = ClusterMethod::KMeans;
  Index k = 0;
  ClusterLabels labels;
  double sr = -std::numeric_limits<double>::infinity();
  std::optional<std::string> error;

  bool ok() const { return !error; }
};

struct SegmentationResult {
  std::vector<Representation> representations;
  std::vector<Candidate> candidates;
  std::size_t winner = 0;
  LabelMap label_map;

  const Candidate& winning() const { return candidates[winner]; }
  const Representation& winning_representation() const {
    return representations[candidates[winner].representation];
  }
};

/*
 * Per recipe: concat_features -> fit_pca -> K from the eigenvalue ratios
 * (or config.k_override) -> top-K PC maps. A recipe that fails is kept with
 * its error message; only when every recipe fails does this throw
 * AllRecipesFailed.
 */
std::vector<Representation> build_candidates(const std::vector<FeatureRecipe>& recipes,
                                             const TensorStore& tensors, const RunConfig& config);

/// Nearest-cell upsampling of grid labels to image resolution.
LabelMap upsample_labels(const ClusterLabels& labels, Index grid_h, Index grid_w, Index image_h,
                         Index image_w);

/*
 * Clusters every representation with every configured method into its own
 * K clusters, scores each with the silhouette rate and keeps the highest.
 * Ties go to the earlier candidate (recipe order, then kmeans before
 * hierarchical). Candidates with K < 2, or whose clustering leaves a cluster
 * empty, are kept in the table as errored. Throws AllCandidatesErrored when
 * nothing is left to choose from.
 */
SegmentationResult run_segmentation(const std::vector<FeatureRecipe>& recipes, const TensorStore& tensors,
                                    Index image_h, Index image_w, const RunConfig& config);

/// PC map j of a representation, min-max scaled to 0..255 (constant maps -> 0).
std::vector<std::uint8_t> pc_map_image(const PcMaps& maps, Index j);

}  // namespace pixclust

#endif  // PIXCLUST_PIPELINE_HPP
