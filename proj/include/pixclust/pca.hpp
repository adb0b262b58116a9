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

#ifndef PIXCLUST_PCA_HPP
#define PIXCLUST_PCA_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pixclust/error.hpp"
#include "pixclust/types.hpp"

namespace pixclust {

/// Default eigenvalue-ratio threshold for choosing K.
inline constexpr double kDefaultEigenRatio = 0.3;

template <typename Scalar>
struct PcaModel {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector<Scalar> mean;
  Vector<Scalar> eigenvalues;  // descending, clamped at 0
  MatrixType eigenvectors;     // column j pairs with eigenvalues(j)
  double t_eig = kDefaultEigenRatio;
  Index k_selected = 1;

  Index dims() const { return mean.size(); }
};

/*
 * K = number of eigenvalues whose ratio to the largest one is strictly
 * greater than t_eig. A zero spectrum gives K = 1.
 *
 *   select_k([1.0, 0.5, 0.31, 0.29], 0.3) == 3
 */
template <typename Derived>
Index select_k(const Eigen::MatrixBase<Derived>& eigenvalues, double t_eig) {
  if (eigenvalues.size() == 0) throw Error(Errc::InvalidArgument, "empty spectrum");
  const double lead = static_cast<double>(eigenvalues(0));
  if (!(lead > 0.0)) return 1;
  Index k = 0;
  for (Index j = 0; j < eigenvalues.size(); ++j) {
    if (static_cast<double>(eigenvalues(j)) / lead > t_eig) ++k;
  }
  return std::max<Index>(k, 1);
}

inline Index select_k(const std::vector<double>& eigenvalues, double t_eig) {
  return select_k(Eigen::Map<const Vector<double>>(eigenvalues.data(),
                                                   static_cast<Index>(eigenvalues.size())),
                  t_eig);
}

/// Flips each column so its largest-magnitude entry (first one on ties) is
/// positive.
template <typename Derived>
void canonicalize_signs(Eigen::MatrixBase<Derived>& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0) vectors.col(j) = -vectors.col(j);
  }
}

/*
 * Eigendecomposition of the sample covariance S = Xc^T Xc / (N - 1) of the
 * rows of `x`. Always works on the C x C covariance, never the N x N Gram
 * matrix. `k_selected` is filled in with select_k(eigenvalues, t_eig).
 */
template <typename Scalar = double, typename Derived>
PcaModel<Scalar> fit_pca(const Eigen::MatrixBase<Derived>& x, double t_eig = kDefaultEigenRatio) {
  using MatrixType = typename PcaModel<Scalar>::MatrixType;
  const Index n = x.rows();
  const Index c = x.cols();
  if (n < 2) throw Error(Errc::DegenerateInput, "PCA needs at least 2 rows");
  if (c < 1) throw Error(Errc::DegenerateInput, "PCA needs at least 1 column");

  const MatrixType data = x.template cast<Scalar>();
  PcaModel<Scalar> model;
  model.t_eig = t_eig;
  model.mean = data.colwise().mean().transpose();
  const MatrixType centered = data.rowwise() - model.mean.transpose();
  MatrixType cov = MatrixType::Zero(c, c);
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  cov /= static_cast<Scalar>(n - 1);

  Eigen::SelfAdjointEigenSolver<MatrixType> solver(cov, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::DegenerateInput, "eigendecomposition did not converge");
  }
  // Eigen returns ascending order.
  model.eigenvalues = solver.eigenvalues().reverse().cwiseMax(Scalar(0));
  model.eigenvectors = solver.eigenvectors().rowwise().reverse();
  canonicalize_signs(model.eigenvectors);
  model.k_selected = select_k(model.eigenvalues, t_eig);
  return model;
}

template <typename Scalar = double, typename S>
PcaModel<Scalar> fit_pca(const GridMatrix<S>& matrix, double t_eig = kDefaultEigenRatio) {
  return fit_pca<Scalar>(matrix.values, t_eig);
}

/// Scores of the rows of `x` on the first k principal axes: (X - mean) V[:, :k].
template <typename Derived, typename Scalar>
RowMatrix<Scalar> project(const Eigen::MatrixBase<Derived>& x, const PcaModel<Scalar>& model, Index k) {
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be >= 1");
  if (k > model.dims()) throw Error(Errc::KTooLarge, "k exceeds feature dimension");
  if (x.cols() != model.dims()) throw Error(Errc::DimMismatch, "column count differs from model");
  RowMatrix<Scalar> centered = x.template cast<Scalar>().rowwise() - model.mean.transpose();
  return centered * model.eigenvectors.leftCols(k);
}

template <typename S>
PcMaps project_pc_maps(const GridMatrix<S>& matrix, const PcaModel<double>& model, Index k) {
  return PcMaps(matrix.grid_h, matrix.grid_w, project(matrix.values, model, k));
}

}  // namespace pixclust

#endif  // PIXCLUST_PCA_HPP
