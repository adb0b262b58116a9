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

#ifndef PIXCLUST_CLUSTERING_HPP
#define PIXCLUST_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pixclust/error.hpp"
#include "pixclust/types.hpp"

namespace pixclust {

enum class ClusterMethod { KMeans, Hierarchical };
enum class Linkage { Ward, Single, Complete, Average };

constexpr std::string_view method_name(ClusterMethod m) {
  return m == ClusterMethod::KMeans ? "kmeans" : "hierarchical";
}

struct ClusterLabels {
  std::vector<int> labels;
  Index k = 0;
  ClusterMethod method = ClusterMethod::KMeans;
  RowMatrix<double> centroids;  // k x C, mean (or seat) of each cluster
  double inertia = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  // k-means only: inertia after every assignment step, final pass included.
  std::vector<double> inertia_history;
  int iterations = 0;

  /// Number of ids in [0, k) that own at least one row.
  Index occupied() const {
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    for (int l : labels) seen[static_cast<std::size_t>(l)] = 1;
    return std::count(seen.begin(), seen.end(), 1);
  }
};

struct KMeansOptions {
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-4;
};

inline constexpr Index kDefaultHierMaxPoints = 4096;

struct HierarchicalOptions {
  Linkage linkage = Linkage::Ward;
  Index max_points = kDefaultHierMaxPoints;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; stable across standard
// libraries, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename A, typename B>
double squared_distance(const A& a, const B& b) {
  return (a - b).squaredNorm();
}

// Nearest centroid per row (ties -> smallest index); returns the inertia.
inline double assign_rows(const RowMatrix<double>& x, const RowMatrix<double>& centroids,
                          std::vector<int>& labels, std::vector<double>* dist2 = nullptr) {
  const Index n = x.rows();
  labels.resize(static_cast<std::size_t>(n));
  if (dist2) dist2->resize(static_cast<std::size_t>(n));
  double inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(x.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    if (dist2) (*dist2)[static_cast<std::size_t>(i)] = best_d;
    inertia += best_d;
  }
  return inertia;
}

// Renumbers labels by order of first appearance and permutes centroid rows
// to match. Unused ids keep their relative order after the used ones.
inline void canonicalize(ClusterLabels& out) {
  const auto k = static_cast<std::size_t>(out.k);
  std::vector<int> remap(k, -1);
  int next = 0;
  for (int l : out.labels) {
    if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (remap[c] < 0) remap[c] = next++;
  }
  for (int& l : out.labels) l = remap[static_cast<std::size_t>(l)];
  if (out.centroids.rows() == out.k) {
    RowMatrix<double> reordered(out.centroids.rows(), out.centroids.cols());
    for (std::size_t c = 0; c < k; ++c) reordered.row(remap[c]) = out.centroids.row(static_cast<Index>(c));
    out.centroids = std::move(reordered);
  }
}

inline RowMatrix<double> cluster_means(const RowMatrix<double>& x, const std::vector<int>& labels,
                                       Index k) {
  RowMatrix<double> sums = RowMatrix<double>::Zero(k, x.cols());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < x.rows(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    sums.row(l) += x.row(i);
    ++counts[static_cast<std::size_t>(l)];
  }
  for (Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      sums.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
  }
  return sums;
}

// k-means++ seeding.
inline RowMatrix<double> seed_plus_plus(const RowMatrix<double>& x, Index k, std::mt19937_64& rng) {
  const Index n = x.rows();
  RowMatrix<double> centers(k, x.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);

  Index first = std::min<Index>(static_cast<Index>(uniform01(rng) * static_cast<double>(n)), n - 1);
  centers.row(0) = x.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = squared_distance(x.row(i), centers.row(0));

  for (Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    Index pick = -1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double d = d2[static_cast<std::size_t>(i)];
        if (d <= 0.0) continue;
        acc += d;
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Fewer distinct points than k; the duplicate seats leave empty clusters.
      for (Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
      }
      if (pick < 0) pick = 0;
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    centers.row(c) = x.row(pick);
    for (Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, squared_distance(x.row(i), centers.row(c)));
    }
  }
  return centers;
}

inline void check_k(Index k, Index n) {
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be >= 1");
  if (k > n) throw Error(Errc::KExceedsPoints, "k exceeds the number of points");
}

}  // namespace detail

/*
 * Lloyd's algorithm with k-means++ seeding. Euclidean distance, stops when
 * no centroid moves by tol or more, or after max_iter updates. A centroid
 * that loses all its points is re-seated on the point farthest from its
 * current centroid. Labels are renumbered by first appearance.
 */
template <typename Derived>
ClusterLabels kmeans(const Eigen::MatrixBase<Derived>& matrix, Index k, const KMeansOptions& opts = {}) {
  const RowMatrix<double> x = matrix.template cast<double>();
  const Index n = x.rows();
  detail::check_k(k, n);

  std::mt19937_64 rng(opts.seed);
  RowMatrix<double> centers = detail::seed_plus_plus(x, k, rng);

  ClusterLabels out;
  out.k = k;
  out.method = ClusterMethod::KMeans;
  out.seed = opts.seed;

  std::vector<double> dist2;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    out.inertia_history.push_back(detail::assign_rows(x, centers, out.labels, &dist2));
    ++out.iterations;

    RowMatrix<double> updated = detail::cluster_means(x, out.labels, k);
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (int l : out.labels) ++counts[static_cast<std::size_t>(l)];
    std::vector<char> reseated(static_cast<std::size_t>(n), 0);
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        if (reseated[static_cast<std::size_t>(i)]) continue;
        if (far < 0 || dist2[static_cast<std::size_t>(i)] > dist2[static_cast<std::size_t>(far)]) far = i;
      }
      if (far < 0 || dist2[static_cast<std::size_t>(far)] <= 0.0) {
        updated.row(c) = centers.row(c);
        continue;
      }
      reseated[static_cast<std::size_t>(far)] = 1;
      updated.row(c) = x.row(far);
    }

    const double shift = (updated - centers).rowwise().norm().maxCoeff();
    centers = std::move(updated);
    if (shift < opts.tol) break;
  }

  out.inertia = detail::assign_rows(x, centers, out.labels);
  out.inertia_history.push_back(out.inertia);
  out.centroids = std::move(centers);
  detail::canonicalize(out);
  return out;
}

template <typename S>
ClusterLabels kmeans(const GridMatrix<S>& matrix, Index k, const KMeansOptions& opts = {}) {
  return kmeans(matrix.values, k, opts);
}

namespace detail {

// Condensed upper-triangular storage, i < j.
class CondensedMatrix {
 public:
  explicit CondensedMatrix(Index n)
      : n_(n), data_(static_cast<std::size_t>(n * (n - 1) / 2)) {}

  double& operator()(Index i, Index j) { return data_[offset(i, j)]; }
  double operator()(Index i, Index j) const { return data_[offset(i, j)]; }

 private:
  std::size_t offset(Index i, Index j) const {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * n_ - i * (i + 1) / 2 + (j - i - 1));
  }

  Index n_;
  std::vector<double> data_;
};

inline double lance_williams(Linkage linkage, double d_ik, double d_jk, double d_ij, double ni,
                             double nj, double nk) {
  switch (linkage) {
    case Linkage::Ward:
      return ((ni + nk) * d_ik + (nj + nk) * d_jk - nk * d_ij) / (ni + nj + nk);
    case Linkage::Single:
      return std::min(d_ik, d_jk);
    case Linkage::Complete:
      return std::max(d_ik, d_jk);
    case Linkage::Average:
      return (ni * d_ik + nj * d_jk) / (ni + nj);
  }
  return d_ik;
}

}  // namespace detail

/*
 * Agglomerative clustering cut at k clusters.
 *
 * Ward runs on squared Euclidean distances (Lance-Williams form); the other
 * linkages on plain Euclidean distances. Among equal linkage values the pair
 * with the lexicographically smallest (i, j) merges first, where a merged
 * cluster keeps the smaller index. O(N^2) memory, so N is capped.
 */
template <typename Derived>
ClusterLabels hierarchical(const Eigen::MatrixBase<Derived>& matrix, Index k,
                           const HierarchicalOptions& opts = {}) {
  const RowMatrix<double> x = matrix.template cast<double>();
  const Index n = x.rows();
  detail::check_k(k, n);
  if (n > opts.max_points) {
    throw Error(Errc::TooManyPoints, "hierarchical clustering limited to " +
                                         std::to_string(opts.max_points) + " points");
  }

  ClusterLabels out;
  out.k = k;
  out.method = ClusterMethod::Hierarchical;
  std::vector<int> rep(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rep[static_cast<std::size_t>(i)] = static_cast<int>(i);

  if (k < n) {
    const bool squared = opts.linkage == Linkage::Ward;
    detail::CondensedMatrix dist(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double d2 = detail::squared_distance(x.row(i), x.row(j));
        dist(i, j) = squared ? d2 : std::sqrt(d2);
      }
    }

    std::vector<char> active(static_cast<std::size_t>(n), 1);
    std::vector<double> size(static_cast<std::size_t>(n), 1.0);
    std::vector<Index> nn(static_cast<std::size_t>(n), -1);
    std::vector<double> nn_dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

    // Nearest active partner with a larger index; ties -> smallest index.
    auto refresh = [&](Index i) {
      Index best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index j = i + 1; j < n; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        const double d = dist(i, j);
        if (best < 0 || d < best_d) {
          best = j;
          best_d = d;
        }
      }
      nn[static_cast<std::size_t>(i)] = best;
      nn_dist[static_cast<std::size_t>(i)] = best_d;
    };
    for (Index i = 0; i < n; ++i) refresh(i);

    for (Index remaining = n; remaining > k; --remaining) {
      Index a = -1;
      for (Index i = 0; i < n; ++i) {
        if (!active[static_cast<std::size_t>(i)] || nn[static_cast<std::size_t>(i)] < 0) continue;
        if (a < 0 || nn_dist[static_cast<std::size_t>(i)] < nn_dist[static_cast<std::size_t>(a)]) a = i;
      }
      const Index b = nn[static_cast<std::size_t>(a)];
      const double d_ab = dist(a, b);
      const double na = size[static_cast<std::size_t>(a)];
      const double nb = size[static_cast<std::size_t>(b)];

      active[static_cast<std::size_t>(b)] = 0;
      for (Index m = 0; m < n; ++m) {
        if (!active[static_cast<std::size_t>(m)] || m == a) continue;
        dist(a, m) = detail::lance_williams(opts.linkage, dist(a, m), dist(b, m), d_ab, na, nb,
                                            size[static_cast<std::size_t>(m)]);
      }
      size[static_cast<std::size_t>(a)] = na + nb;
      for (auto& r : rep) {
        if (r == static_cast<int>(b)) r = static_cast<int>(a);
      }

      for (Index m = 0; m < b; ++m) {
        if (!active[static_cast<std::size_t>(m)]) continue;
        const Index cur = nn[static_cast<std::size_t>(m)];
        if (m == a || cur == a || cur == b) {
          refresh(m);
        } else if (m < a) {
          const double d = dist(m, a);
          if (d < nn_dist[static_cast<std::size_t>(m)] ||
              (d == nn_dist[static_cast<std::size_t>(m)] && a < cur)) {
            nn[static_cast<std::size_t>(m)] = a;
            nn_dist[static_cast<std::size_t>(m)] = d;
          }
        }
      }
    }
  }

  // Representatives -> dense ids; canonicalize renumbers by first appearance.
  std::vector<int> dense(static_cast<std::size_t>(n), -1);
  int next = 0;
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    int& d = dense[static_cast<std::size_t>(rep[static_cast<std::size_t>(i)])];
    if (d < 0) d = next++;
    out.labels[static_cast<std::size_t>(i)] = d;
  }
  out.centroids = detail::cluster_means(x, out.labels, k);
  out.inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    out.inertia += detail::squared_distance(x.row(i), out.centroids.row(out.labels[static_cast<std::size_t>(i)]));
  }
  return out;
}

template <typename S>
ClusterLabels hierarchical(const GridMatrix<S>& matrix, Index k, const HierarchicalOptions& opts = {}) {
  return hierarchical(matrix.values, k, opts);
}

/// Stride-s spatial subsample of a grid, s the smallest stride keeping at
/// most n_max cells. `rows` maps kept rows to original row indices.
struct GridSample {
  Index stride = 1;
  Index grid_h = 0;
  Index grid_w = 0;
  std::vector<Index> rows;
};

inline GridSample sample_grid(Index grid_h, Index grid_w, Index n_max) {
  if (n_max < 1) throw Error(Errc::InvalidArgument, "n_max must be >= 1");
  GridSample s;
  auto ceil_div = [](Index a, Index b) { return (a + b - 1) / b; };
  while (ceil_div(grid_h, s.stride) * ceil_div(grid_w, s.stride) > n_max) ++s.stride;
  s.grid_h = ceil_div(grid_h, s.stride);
  s.grid_w = ceil_div(grid_w, s.stride);
  s.rows.reserve(static_cast<std::size_t>(s.grid_h * s.grid_w));
  for (Index h = 0; h < grid_h; h += s.stride) {
    for (Index w = 0; w < grid_w; w += s.stride) s.rows.push_back(h * grid_w + w);
  }
  return s;
}

template <typename S>
std::pair<GridMatrix<S>, std::vector<Index>> downsample_rows(const GridMatrix<S>& matrix, Index n_max) {
  GridSample s = sample_grid(matrix.grid_h, matrix.grid_w, n_max);
  if (s.stride == 1) return {matrix, std::move(s.rows)};
  RowMatrix<S> kept(static_cast<Index>(s.rows.size()), matrix.cols());
  for (std::size_t r = 0; r < s.rows.size(); ++r) kept.row(static_cast<Index>(r)) = matrix.values.row(s.rows[r]);
  return {GridMatrix<S>(s.grid_h, s.grid_w, std::move(kept)), std::move(s.rows)};
}

/// Labels every row with its nearest centroid (ties -> smallest index).
template <typename Derived, typename CentroidDerived>
ClusterLabels assign_nearest(const Eigen::MatrixBase<Derived>& matrix,
                             const Eigen::MatrixBase<CentroidDerived>& centroids) {
  if (centroids.rows() < 1) throw Error(Errc::InvalidArgument, "no centroids");
  if (centroids.cols() != matrix.cols()) throw Error(Errc::DimMismatch, "centroid width differs");
  ClusterLabels out;
  out.k = centroids.rows();
  out.centroids = centroids.template cast<double>();
  out.inertia = detail::assign_rows(matrix.template cast<double>(), out.centroids, out.labels);
  return out;
}

/*
 * Hierarchical clustering that stays within the O(N^2) budget: grids larger
 * than max_points are clustered on a strided subsample, and the remaining
 * rows join the nearest subsample-cluster mean.
 */
template <typename S>
ClusterLabels hierarchical_on_grid(const GridMatrix<S>& matrix, Index k, const HierarchicalOptions& opts = {}) {
  if (matrix.rows() <= opts.max_points) return hierarchical(matrix.values, k, opts);
  const auto [sample, index_map] = downsample_rows(matrix, opts.max_points);
  ClusterLabels coarse = hierarchical(sample.values, k, opts);
  ClusterLabels full = assign_nearest(matrix.values, coarse.centroids);
  full.method = ClusterMethod::Hierarchical;
  detail::canonicalize(full);
  return full;
}

}  // namespace pixclust

#endif  // PIXCLUST_CLUSTERING_HPP
