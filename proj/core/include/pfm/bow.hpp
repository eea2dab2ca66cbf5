#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace pfm {

struct KMeansParams {
  int max_iters = 50;
  double tol = 1e-6;  // stop once the relative drop of the within-cluster error falls below this
  std::uint64_t seed = 0;
};

/// Visual vocabulary, one centroid per row.
struct Codebook {
  Eigen::MatrixXd centroids;

  int size() const noexcept { return static_cast<int>(centroids.rows()); }
  int dim() const noexcept { return static_cast<int>(centroids.cols()); }
};

/// Seeded k-means++ followed by Lloyd iterations. Samples are rows of `data`.
Codebook fit_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& data, int k, const KMeansParams& params = {});

/// Index of the nearest centroid per row, ties to the lowest index.
Eigen::VectorXi nearest_centroids(const Eigen::Ref<const Eigen::MatrixXd>& data, const Eigen::MatrixXd& centroids);

struct BowHistogram {
  Eigen::VectorXd values;
  bool empty = false;  // no descriptors: all-zero histogram
};

/// Hard-assignment counts, L1-normalized, then square-rooted (Hellinger map).
BowHistogram bow_encode(const Eigen::Ref<const Eigen::MatrixXd>& descriptors, const Codebook& codebook);

}  // namespace pfm
