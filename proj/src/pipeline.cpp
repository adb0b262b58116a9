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

#include "pixclust/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace pixclust {

void RunConfig::validate() const {
  if (!(t_eig > 0.0 && t_eig < 1.0)) throw Error(Errc::InvalidArgument, "t_eig must lie in (0, 1)");
  if (!(t_sil >= -1.0 && t_sil < 1.0)) throw Error(Errc::InvalidArgument, "t_sil must lie in [-1, 1)");
  if (methods.empty()) throw Error(Errc::InvalidArgument, "at least one clustering method is required");
  if (k_override && *k_override < 1) throw Error(Errc::InvalidArgument, "k must be >= 1");
  if (n_max_silhouette < 2) throw Error(Errc::InvalidArgument, "silhouette sample cap must be >= 2");
  if (n_hier_max < 1) throw Error(Errc::InvalidArgument, "hierarchical point cap must be >= 1");
}

std::vector<Representation> build_candidates(const std::vector<FeatureRecipe>& recipes,
                                             const TensorStore& tensors, const RunConfig& config) {
  if (recipes.empty()) throw Error(Errc::EmptyRecipe, "no recipes given");
  std::vector<Representation> out;
  out.reserve(recipes.size());
  for (const auto& recipe : recipes) {
    Representation rep;
    rep.recipe_id = recipe.id;
    try {
      if (recipe.sources.empty()) throw Error(Errc::EmptyRecipe, "recipe '" + recipe.id + "' has no sources");
      std::vector<FeatureTensor> inputs;
      for (const auto& name : recipe.sources) {
        const auto it = tensors.find(name);
        if (it == tensors.end()) throw Error(Errc::InvalidArgument, "unknown tensor '" + name + "'");
        inputs.push_back(it->second);
      }
      const PixelMatrix pixels = concat_features(recipe, inputs);
      rep.model = fit_pca(pixels, config.t_eig);
      rep.k = config.k_override.value_or(rep.model.k_selected);
      rep.pc_maps = project_pc_maps(pixels, rep.model, rep.k);
    } catch (const Error& e) {
      rep.error = e.what();
    }
    out.push_back(std::move(rep));
  }
  if (std::none_of(out.begin(), out.end(), [](const auto& r) { return r.ok(); })) {
    throw Error(Errc::AllRecipesFailed, "every recipe failed: " + *out.front().error);
  }
  return out;
}

LabelMap upsample_labels(const ClusterLabels& labels, Index grid_h, Index grid_w, Index image_h,
                         Index image_w) {
  if (static_cast<Index>(labels.labels.size()) != grid_h * grid_w) {
    throw Error(Errc::DimMismatch, "label count differs from grid size");
  }
  if (image_h < 1 || image_w < 1) throw Error(Errc::InvalidArgument, "image size must be at least 1x1");
  for (int l : labels.labels) {
    if (l < 0 || l > kMaxLabel) throw Error(Errc::LabelOutOfRange, "cluster id does not fit in a label map");
  }
  // Nearest cell centre, floor((2y+1)g / 2H). Midpoints round up.
  auto cell = [](Index y, Index image, Index grid) {
    return std::min(((2 * y + 1) * grid) / (2 * image), grid - 1);
  };
  LabelMap map(image_h, image_w);
  for (Index y = 0; y < image_h; ++y) {
    const Index gy = cell(y, image_h, grid_h);
    for (Index x = 0; x < image_w; ++x) {
      const Index gx = cell(x, image_w, grid_w);
      map.at(y, x) = static_cast<std::uint8_t>(labels.labels[static_cast<std::size_t>(gy * grid_w + gx)]);
    }
  }
  return map;
}

SegmentationResult run_segmentation(const std::vector<FeatureRecipe>& recipes, const TensorStore& tensors,
                                    Index image_h, Index image_w, const RunConfig& config) {
  config.validate();
  SegmentationResult result;
  result.representations = build_candidates(recipes, tensors, config);

  for (std::size_t r = 0; r < result.representations.size(); ++r) {
    const Representation& rep = result.representations[r];
    for (ClusterMethod method : config.methods) {
      Candidate cand;
      cand.recipe_id = rep.recipe_id;
      cand.representation = r;
      cand.method = method;
      cand.k = rep.k;
      if (!rep.ok()) {
        cand.error = rep.error;
        result.candidates.push_back(std::move(cand));
        continue;
      }
      try {
        if (rep.k < 2) throw Error(Errc::SingleCluster, "K = 1, silhouette rate undefined");
        if (method == ClusterMethod::KMeans) {
          cand.labels = kmeans(rep.pc_maps.values, rep.k, KMeansOptions{config.seed, config.max_iter, config.tol});
        } else {
          cand.labels = hierarchical_on_grid(rep.pc_maps, rep.k, HierarchicalOptions{config.linkage, config.n_hier_max});
        }
        cand.labels.seed = config.seed;
        if (cand.labels.occupied() != rep.k) {
          throw Error(Errc::ClusterCollapse, "clustering produced fewer than K non-empty clusters");
        }
        cand.sr = sr_for_clustering(rep.pc_maps, cand.labels, config.t_sil, config.n_max_silhouette).sr;
      } catch (const Error& e) {
        cand.error = e.what();
        cand.sr = -std::numeric_limits<double>::infinity();
      }
      result.candidates.push_back(std::move(cand));
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < result.candidates.size(); ++c) {
    const auto& cand = result.candidates[c];
    if (!cand.ok()) continue;
    if (!best || cand.sr > result.candidates[*best].sr) best = c;
  }
  if (!best) throw Error(Errc::AllCandidatesErrored, "no candidate produced a usable clustering");
  result.winner = *best;

  const Representation& rep = result.winning_representation();
  result.label_map = upsample_labels(result.winning().labels, rep.pc_maps.grid_h, rep.pc_maps.grid_w,
                                     image_h, image_w);
  return result;
}

std::vector<std::uint8_t> pc_map_image(const PcMaps& maps, Index j) {
  if (j < 0 || j >= maps.cols()) throw Error(Errc::InvalidArgument, "PC map index out of range");
  const auto column = maps.values.col(j);
  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(maps.rows()), 0);
  if (!(hi > lo)) return pixels;
  for (Index i = 0; i < maps.rows(); ++i) {
    const double scaled = (column(i) - lo) / (hi - lo) * 255.0;
    pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(std::clamp(scaled, 0.0, 255.0)));
  }
  return pixels;
}

}  // namespace pixclust
