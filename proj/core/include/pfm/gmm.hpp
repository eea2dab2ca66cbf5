#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace pfm {

struct EmParams {
  int max_iters = 100;
  double tol = 1e-6;             // stop when the average log-likelihood gains less than this
  double variance_floor = 1e-4;  // relative to the per-dimension data variance
  int kmeans_iters = 20;
  std::uint64_t seed = 0;
};

/// Diagonal-covariance Gaussian mixture. Parameters are stored one component per row.
class GaussianMixture {
 public:
  GaussianMixture() = default;
  GaussianMixture(Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd variances);

  int components() const noexcept { return static_cast<int>(weights_.size()); }
  int dim() const noexcept { return static_cast<int>(means_.cols()); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const Eigen::MatrixXd& means() const noexcept { return means_; }
  const Eigen::MatrixXd& variances() const noexcept { return variances_; }

  /// log(w_i N(x | mu_i, Sigma_i)) per sample (rows) and component (columns).
  Eigen::MatrixXd log_joint(const Eigen::Ref<const Eigen::MatrixXd>& data) const;

  /// Responsibilities; each row sums to one. Optionally returns log p(x) per sample.
  Eigen::MatrixXd posteriors(const Eigen::Ref<const Eigen::MatrixXd>& data, Eigen::VectorXd* log_likelihood = nullptr) const;

  double average_log_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& data) const;

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd variances_;
};

struct GmmFit {
  GaussianMixture model;
  std::vector<double> log_likelihood;  // average per sample, one entry per E-step
  int reseeds = 0;                     // collapsed components re-seeded
  bool converged = false;
};

/// EM from a seeded k-means start. Needs at least 10 samples per component.
GmmFit fit_gmm(const Eigen::Ref<const Eigen::MatrixXd>& data, int components, const EmParams& params = {});

}  // namespace pfm
