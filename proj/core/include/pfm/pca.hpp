#pragma once

#include <Eigen/Core>

namespace pfm {

/// Principal subspace of mean-centered data. Eigenvalues use the 1/n covariance so the
/// average squared reconstruction error equals `discarded_variance()`.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;        // dim x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // k, nonincreasing
  double total_variance = 0.0;  // trace of the covariance

  int input_dim() const noexcept { return static_cast<int>(basis.rows()); }
  int output_dim() const noexcept { return static_cast<int>(basis.cols()); }
  double discarded_variance() const noexcept { return total_variance - eigenvalues.sum(); }
};

/// Fits the top-k principal directions of the rows of `data`; needs k <= min(rows, cols).
/// Uses the covariance eigenproblem when dim <= rows and the Gram-matrix one otherwise.
PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& data, int k);

Eigen::VectorXd apply_pca(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Projects every row.
Eigen::MatrixXd apply_pca_rows(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& data);
Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);

}  // namespace pfm
