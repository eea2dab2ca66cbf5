#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pfm/bow.hpp"
#include "pfm/error.hpp"

namespace pfm {

namespace {

// Squared distances (rows x centroids) via the expanded form, clamped at zero.
Eigen::MatrixXd squared_distances(const Eigen::Ref<const Eigen::MatrixXd>& data, const Eigen::MatrixXd& centroids,
                                  const Eigen::VectorXd& data_norms) {
  Eigen::MatrixXd d = -2.0 * data * centroids.transpose();
  d.colwise() += data_norms;
  d.rowwise() += centroids.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

}  // namespace

Eigen::VectorXi nearest_centroids(const Eigen::Ref<const Eigen::MatrixXd>& data, const Eigen::MatrixXd& centroids) {
  if (data.cols() != centroids.cols()) throw Error(ErrorKind::DimensionMismatch, "descriptor/codebook dimension");
  const Eigen::MatrixXd d = squared_distances(data, centroids, data.rowwise().squaredNorm());
  Eigen::VectorXi out(data.rows());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Eigen::Index best = 0;
    d.row(i).minCoeff(&best);  // first minimum
    out(i) = static_cast<int>(best);
  }
  return out;
}

Codebook fit_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& data, int k, const KMeansParams& params) {
  const Eigen::Index n = data.rows();
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k-means needs k >= 1");
  if (n < k) throw Error(ErrorKind::InsufficientData, "k-means needs at least k samples");
  std::mt19937_64 rng(params.seed);
  const Eigen::VectorXd norms = data.rowwise().squaredNorm();

  // k-means++ seeding
  Eigen::MatrixXd centroids(k, data.cols());
  centroids.row(0) = data.row(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  Eigen::VectorXd closest = (data.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        r -= closest(pick);
        if (r < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    }
    centroids.row(c) = data.row(pick);
    closest = closest.cwiseMin((data.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  Eigen::VectorXi assign(n);
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < params.max_iters; ++it) {
    const Eigen::MatrixXd d = squared_distances(data, centroids, norms);
    double inertia = 0.0;
    Eigen::VectorXd best_dist(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      best_dist(i) = d.row(i).minCoeff(&best);
      assign(i) = static_cast<int>(best);
      inertia += best_dist(i);
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign(i)) += data.row(i);
      counts(assign(i)) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0.0) {
        centroids.row(c) = sums.row(c) / counts(c);
      } else {
        // empty cluster takes over the worst-served point
        Eigen::Index far = 0;
        best_dist.maxCoeff(&far);
        centroids.row(c) = data.row(far);
        best_dist(far) = 0.0;
      }
    }
    if (std::isfinite(previous) && previous - inertia <= params.tol * previous) break;
    previous = inertia;
  }
  return Codebook{std::move(centroids)};
}

}  // namespace pfm
