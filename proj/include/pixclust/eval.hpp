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

#ifndef PIXCLUST_EVAL_HPP
#define PIXCLUST_EVAL_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pixclust/error.hpp"
#include "pixclust/types.hpp"

namespace pixclust {

/// Divisor of the mIoU mean: number of predicted clusters, or of gt classes.
enum class NMode { Clusters, Gt };

struct MatchedPair {
  int pred = 0;
  int gt = 0;
  Index tp = 0;
  Index fp = 0;
  Index fn = 0;
  double iou = 0.0;
};

/// Injective pred -> gt correspondence. Pairs are sorted by pred label; only
/// pairs with positive overlap are kept.
struct Matching {
  std::vector<MatchedPair> pairs;
  std::vector<int> pred_labels;  // distinct labels present, ascending
  std::vector<int> gt_labels;
  std::vector<int> unmatched_pred;
  std::vector<int> unmatched_gt;
};

struct EvalReport {
  Matching matching;
  NMode n_mode = NMode::Clusters;
  double p_acc = 0.0;
  double m_iou = 0.0;  // under n_mode
  double m_iou_clusters = 0.0;
  double m_iou_gt = 0.0;
  Index n_classes_used = 0;
};

/// Rectangular maximum-weight assignment (Hungarian method). Returns, for
/// each row, the assigned column or -1.
std::vector<int> solve_assignment(const Eigen::MatrixXd& weights);

Matching match_labels(const LabelMap& pred, const LabelMap& gt);
double pixel_accuracy(const LabelMap& pred, const LabelMap& gt, const Matching& matching);
double mean_iou(const LabelMap& pred, const LabelMap& gt, const Matching& matching, NMode n_mode);
EvalReport evaluate(const LabelMap& pred, const LabelMap& gt, NMode n_mode = NMode::Clusters);

struct BatchEntry {
  std::filesystem::path pred;
  std::filesystem::path gt;
  EvalReport report;
};

struct BatchReport {
  std::vector<BatchEntry> entries;
  double mean_p_acc = 0.0;
  double mean_m_iou = 0.0;
  double mean_m_iou_clusters = 0.0;
  double mean_m_iou_gt = 0.0;
};

/// Reads a JSON-lines manifest of {"pred": path, "gt": path}; relative paths
/// resolve against the manifest's directory.
std::vector<std::pair<std::filesystem::path, std::filesystem::path>> read_manifest(
    const std::filesystem::path& manifest);

/// Per-image reports plus arithmetic means over images.
BatchReport evaluate_batch(
    const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>& items,
    NMode n_mode = NMode::Clusters);

}  // namespace pixclust

#endif  // PIXCLUST_EVAL_HPP
