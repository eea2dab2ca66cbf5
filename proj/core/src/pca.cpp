#include "pfm/pca.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Eigenvalues>

#include "pfm/error.hpp"

namespace pfm {

namespace {

// Eigen returns ascending order with arbitrary signs; flip to descending and make the
// largest-magnitude entry of each vector positive so fits are reproducible.
void canonicalize(Eigen::MatrixXd& vectors, Eigen::VectorXd& values) {
  const Eigen::Index m = values.size();
  vectors = vectors.rowwise().reverse().eval();
  values = values.reverse().eval();
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index idx = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&idx);
    if (vectors(idx, j) < 0.0) vectors.col(j) *= -1.0;
  }
  values = values.cwiseMax(0.0);
}

// Modified Gram-Schmidt on the columns, run twice; columns that vanish are replaced by
// the first standard basis vector that is still independent.
void orthonormalize(Eigen::MatrixXd& b) {
  Eigen::Index next_unit = 0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    for (int attempt = 0;; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < j; ++i) b.col(j) -= b.col(i).dot(b.col(j)) * b.col(i);
      }
      const double norm = b.col(j).norm();
      if (norm > 1e-6) {
        b.col(j) /= norm;
        break;
      }
      if (next_unit >= b.rows()) throw Error(ErrorKind::InvalidArgument, "cannot complete PCA basis");
      b.col(j) = Eigen::VectorXd::Unit(b.rows(), next_unit++);
    }
  }
}

}  // namespace

PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& data, int k) {
  const Eigen::Index n = data.rows(), d = data.cols();
  if (k < 1 || k > std::min(n, d)) {
    throw Error(ErrorKind::InvalidArgument, "PCA dimension " + std::to_string(k) + " exceeds min(samples=" +
                                                std::to_string(n) + ", dim=" + std::to_string(d) + ")");
  }
  if (!data.allFinite()) throw Error(ErrorKind::InvalidArgument, "non-finite PCA input");
  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const double inv_n = 1.0 / static_cast<double>(n);
  model.total_variance = centered.squaredNorm() * inv_n;

  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  if (d <= n) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), inv_n);
    cov = cov.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    vectors = solver.eigenvectors();
    values = solver.eigenvalues();
    canonicalize(vectors, values);
    model.basis = vectors.leftCols(k);
    model.eigenvalues = values.head(k);
  } else {
    // Gram route: eigenvectors of X X^T / n map to covariance eigenvectors via X^T u / sqrt(n lambda).
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(centered, inv_n);
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    vectors = solver.eigenvectors();
    values = solver.eigenvalues();
    canonicalize(vectors, values);
    const double cutoff = 1e-10 * std::max(values(0), 1e-300);
    model.basis = Eigen::MatrixXd::Zero(d, k);
    model.eigenvalues = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < k; ++j) {
      if (values(j) <= cutoff) continue;  // rank-deficient tail, completed below
      model.basis.col(j) = centered.transpose() * vectors.col(j) / std::sqrt(static_cast<double>(n) * values(j));
      model.eigenvalues(j) = values(j);
    }
    orthonormalize(model.basis);
  }
  return model;
}

Eigen::VectorXd apply_pca(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.input_dim()) throw Error(ErrorKind::DimensionMismatch, "PCA input dimension");
  return model.basis.transpose() * (x - model.mean);
}

Eigen::MatrixXd apply_pca_rows(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& data) {
  if (data.cols() != model.input_dim()) throw Error(ErrorKind::DimensionMismatch, "PCA input dimension");
  return (data.rowwise() - model.mean.transpose()) * model.basis;
}

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != model.output_dim()) throw Error(ErrorKind::DimensionMismatch, "PCA code dimension");
  return model.mean + model.basis * z;
}

}  // namespace pfm
