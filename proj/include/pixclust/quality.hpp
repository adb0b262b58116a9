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

#ifndef PIXCLUST_QUALITY_HPP
#define PIXCLUST_QUALITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pixclust/clustering.hpp"
#include "pixclust/error.hpp"
#include "pixclust/types.hpp"

namespace pixclust {

inline constexpr double kDefaultSilhouetteThreshold = 0.3;
inline constexpr Index kDefaultSilhouetteMaxPoints = 8192;

struct SilhouetteReport {
  std::vector<double> scores;
  std::vector<Index> rows;  // row evaluated for each score
  double t_sil = kDefaultSilhouetteThreshold;
  double sr = 0.0;
};

/*
 * Per-point silhouette s = (b - a) / max(a, b) with Euclidean distances:
 *   a = mean distance to the other members of the point's own cluster,
 *   b = smallest mean distance to the members of another cluster.
 * Members of singleton clusters score 0. Any labeling works, cluster ids
 * need not be contiguous.
 */
template <typename Derived>
std::vector<double> silhouette_scores(const Eigen::MatrixBase<Derived>& matrix, std::span<const int> labels) {
  const Index n = matrix.rows();
  if (static_cast<Index>(labels.size()) != n) {
    throw Error(Errc::DimMismatch, "label count differs from row count");
  }
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw Error(Errc::InvalidArgument, "negative cluster label");
    max_label = std::max(max_label, l);
  }
  const auto k = static_cast<std::size_t>(max_label + 1);
  std::vector<Index> counts(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  if (std::count_if(counts.begin(), counts.end(), [](Index c) { return c > 0; }) < 2) {
    throw Error(Errc::SingleCluster, "silhouette needs at least two clusters");
  }

  const RowMatrix<double> x = matrix.template cast<double>();
  std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sums(k);
  for (Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (x.row(i) - x.row(j)).norm();
    }
    const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (counts[own] < 2) continue;
    const double a = sums[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    scores[static_cast<std::size_t>(i)] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return scores;
}

template <typename Derived>
std::vector<double> silhouette_scores(const Eigen::MatrixBase<Derived>& matrix, const ClusterLabels& labels) {
  return silhouette_scores(matrix, std::span<const int>(labels.labels));
}

/// Fraction of scores strictly greater than t_sil.
inline double silhouette_rate(std::span<const double> scores, double t_sil) {
  if (scores.empty()) throw Error(Errc::InvalidArgument, "no silhouette scores");
  const auto above = std::count_if(scores.begin(), scores.end(), [t_sil](double s) { return s > t_sil; });
  return static_cast<double>(above) / static_cast<double>(scores.size());
}

/*
 * Rows kept when at most n_max points may be scored: every cluster keeps one
 * row, the remaining budget is split in proportion to cluster size (largest
 * remainder, smaller id first on ties) and each cluster takes its members at
 * a fixed stride. Returned ascending.
 */
inline std::vector<Index> stratified_sample(std::span<const int> labels, Index n_max) {
  const auto n = static_cast<Index>(labels.size());
  if (n <= n_max) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(max_label + 1));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);

  std::vector<std::size_t> present;
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (!members[c].empty()) present.push_back(c);
  }
  std::vector<Index> quota(members.size(), 0);
  Index budget = n_max;
  if (static_cast<Index>(present.size()) <= n_max) {
    for (std::size_t c : present) quota[c] = 1;
    budget -= static_cast<Index>(present.size());
  }
  std::vector<std::pair<double, std::size_t>> remainders;
  Index used = 0;
  for (std::size_t c : present) {
    const double share = static_cast<double>(budget) * static_cast<double>(members[c].size()) / static_cast<double>(n);
    const auto whole = std::min<Index>(static_cast<Index>(share), static_cast<Index>(members[c].size()) - quota[c]);
    quota[c] += whole;
    used += whole;
    remainders.emplace_back(share - static_cast<double>(whole), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  for (std::size_t r = 0; used < budget && r < remainders.size(); ++r) {
    const std::size_t c = remainders[r].second;
    if (quota[c] < static_cast<Index>(members[c].size())) {
      ++quota[c];
      ++used;
    }
  }

  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(n_max));
  for (std::size_t c : present) {
    const auto size = static_cast<Index>(members[c].size());
    for (Index j = 0; j < quota[c]; ++j) rows.push_back(members[c][static_cast<std::size_t>(j * size / quota[c])]);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

/// Silhouette rate of a clustering, scored on a stratified subsample when
/// the matrix has more than n_max rows.
template <typename Derived>
SilhouetteReport sr_for_clustering(const Eigen::MatrixBase<Derived>& matrix, std::span<const int> labels,
                                   double t_sil = kDefaultSilhouetteThreshold,
                                   Index n_max = kDefaultSilhouetteMaxPoints) {
  if (static_cast<Index>(labels.size()) != matrix.rows()) {
    throw Error(Errc::DimMismatch, "labels do not cover the matrix rows");
  }
  SilhouetteReport report;
  report.t_sil = t_sil;
  report.rows = stratified_sample(labels, n_max);
  if (static_cast<Index>(report.rows.size()) == matrix.rows()) {
    report.scores = silhouette_scores(matrix, labels);
  } else {
    RowMatrix<double> sub(static_cast<Index>(report.rows.size()), matrix.cols());
    std::vector<int> sub_labels(report.rows.size());
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      sub.row(static_cast<Index>(r)) = matrix.row(report.rows[r]).template cast<double>();
      sub_labels[r] = labels[static_cast<std::size_t>(report.rows[r])];
    }
    report.scores = silhouette_scores(sub, std::span<const int>(sub_labels));
  }
  report.sr = silhouette_rate(report.scores, t_sil);
  return report;
}

template <typename S>
SilhouetteReport sr_for_clustering(const GridMatrix<S>& matrix, const ClusterLabels& labels,
                                   double t_sil = kDefaultSilhouetteThreshold,
                                   Index n_max = kDefaultSilhouetteMaxPoints) {
  return sr_for_clustering(matrix.values, std::span<const int>(labels.labels), t_sil, n_max);
}

}  // namespace pixclust

#endif  // PIXCLUST_QUALITY_HPP
