#pragma once

#include <Eigen/Dense>
#include <utility>

#include "dsaflow/imageio.hpp"

namespace dsaflow {

/// Vectorized series: row r is frame r flattened row-major, so the matrix
/// is d x n with n = h*w. Frame shape kept for back-projection.
struct DataMatrix {
    Eigen::MatrixXd values;
    int frame_rows = 0;
    int frame_cols = 0;
};

/// Invertible record of the centering + whitening step.
/// projection maps centered d-vectors to p whitened coordinates.
struct WhiteningTransform {
    Eigen::VectorXd mean;         // length n, per-pixel temporal mean
    Eigen::MatrixXd projection;   // p x d
    Eigen::VectorXd eigenvalues;  // all d principal variances, descending
};

DataMatrix vectorize(const ImageSeries& series);

Image devectorize(const Eigen::VectorXd& row, int rows, int cols);

/// Subtracts the per-pixel temporal mean from every column.
/// Requires at least two rows.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> center(const Eigen::MatrixXd& matrix);

/// Population second-moment covariance of the rows, pixels as samples:
/// M * M^T / n. The convention used across the whitening contracts.
Eigen::MatrixXd row_covariance(const Eigen::MatrixXd& m);

/// Relative eigenvalue floor below which whitening reports rank deficiency.
inline constexpr double kRankEpsilon = 1e-10;

/// Eigendecomposition of the d x d row covariance; keeps the p largest
/// eigenpairs and returns K = Lambda_p^{-1/2} E_p^T applied to the input.
/// The mean vector is carried into the returned transform.
std::pair<Eigen::MatrixXd, WhiteningTransform> whiten(const Eigen::MatrixXd& centered,
                                                      const Eigen::VectorXd& mean, int p);

}  // namespace dsaflow
