#include "pfm/gmm.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pfm/bow.hpp"
#include "pfm/error.hpp"

namespace pfm {

namespace {

constexpr double kCollapsedWeight = 1e-8;

// Log-joint with the squared data passed in so EM can reuse it across iterations.
Eigen::MatrixXd log_joint_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::MatrixXd& x2,
                               const Eigen::VectorXd& w, const Eigen::MatrixXd& mu, const Eigen::MatrixXd& var) {
  const Eigen::MatrixXd inv = var.cwiseInverse();
  const Eigen::MatrixXd mu_inv = mu.cwiseProduct(inv);
  Eigen::VectorXd constant(w.size());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    constant(k) = std::log(w(k)) -
                  0.5 * (mu.row(k).cwiseProduct(mu_inv.row(k)).sum() + var.row(k).array().log().sum() +
                         static_cast<double>(mu.cols()) * log_two_pi);
  }
  Eigen::MatrixXd out = x * mu_inv.transpose();
  out.noalias() -= 0.5 * x2 * inv.transpose();
  out.rowwise() += constant.transpose();
  return out;
}

// Below this log-responsibility exp() lands in the subnormal range, which makes the
// M-step products crawl; those entries are flushed to zero.
constexpr double kLogFlush = -700.0;

// Normalizes log-joint rows in place into responsibilities; returns per-row log p(x).
Eigen::VectorXd normalize_rows(Eigen::MatrixXd& lj) {
  Eigen::VectorXd lse(lj.rows());
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    const double m = lj.row(i).maxCoeff();
    const double s = (lj.row(i).array() - m).cwiseMax(kLogFlush).exp().sum();
    lse(i) = m + std::log(s);
    const auto shifted = (lj.row(i).array() - lse(i)).eval();
    lj.row(i) = (shifted < kLogFlush).select(0.0, shifted.exp());
  }
  return lse;
}

}  // namespace

GaussianMixture::GaussianMixture(Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  if (weights_.size() < 1 || means_.rows() != weights_.size() || variances_.rows() != weights_.size() ||
      means_.cols() != variances_.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "inconsistent GMM parameter shapes");
  }
  if (!weights_.allFinite() || !means_.allFinite() || !variances_.allFinite() || (weights_.array() <= 0.0).any() ||
      (variances_.array() <= 0.0).any()) {
    throw Error(ErrorKind::InvalidArgument, "GMM weights and variances must be positive and finite");
  }
  weights_ /= weights_.sum();
}

Eigen::MatrixXd GaussianMixture::log_joint(const Eigen::Ref<const Eigen::MatrixXd>& data) const {
  if (data.cols() != dim()) throw Error(ErrorKind::DimensionMismatch, "data dimension does not match GMM");
  return log_joint_impl(data, data.array().square().matrix(), weights_, means_, variances_);
}

Eigen::MatrixXd GaussianMixture::posteriors(const Eigen::Ref<const Eigen::MatrixXd>& data,
                                            Eigen::VectorXd* log_likelihood) const {
  Eigen::MatrixXd lj = log_joint(data);
  Eigen::VectorXd lse = normalize_rows(lj);
  if (log_likelihood) *log_likelihood = std::move(lse);
  return lj;
}

double GaussianMixture::average_log_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& data) const {
  Eigen::VectorXd ll;
  posteriors(data, &ll);
  return ll.mean();
}

GmmFit fit_gmm(const Eigen::Ref<const Eigen::MatrixXd>& data, int components, const EmParams& params) {
  const Eigen::Index n = data.rows(), d = data.cols();
  if (components < 1) throw Error(ErrorKind::InvalidArgument, "GMM needs at least one component");
  if (n < 10 * static_cast<Eigen::Index>(components)) {
    throw Error(ErrorKind::InsufficientData, "GMM with " + std::to_string(components) + " components needs " +
                                                 std::to_string(10 * components) + " samples, got " +
                                                 std::to_string(n));
  }
  if (!data.allFinite()) throw Error(ErrorKind::InvalidArgument, "non-finite descriptor values");

  const Eigen::RowVectorXd data_mean = data.colwise().mean();
  const Eigen::RowVectorXd data_var =
      ((data.rowwise() - data_mean).array().square().colwise().sum() / static_cast<double>(n)).matrix();
  const Eigen::RowVectorXd floor = (data_var * params.variance_floor).cwiseMax(1e-12);
  const Eigen::MatrixXd x2 = data.array().square().matrix();

  // k-means start: centroids, hard-assignment weights and per-cluster variances
  Eigen::VectorXd w(components);
  Eigen::MatrixXd mu(components, d), var(components, d);
  {
    const Codebook cb = fit_kmeans(data, components, {params.kmeans_iters, 1e-6, params.seed});
    const Eigen::VectorXi assign = nearest_centroids(data, cb.centroids);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(components);
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(components, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      counts(assign(i)) += 1.0;
      sq.row(assign(i)) += (data.row(i) - cb.centroids.row(assign(i))).array().square().matrix();
    }
    mu = cb.centroids;
    for (int k = 0; k < components; ++k) {
      w(k) = std::max(counts(k), 1.0) / static_cast<double>(n);
      var.row(k) = counts(k) > 1.0 ? Eigen::RowVectorXd(sq.row(k) / counts(k)) : data_var;
      var.row(k) = var.row(k).cwiseMax(floor);
    }
    w /= w.sum();
  }

  GmmFit fit;
  for (int it = 0;; ++it) {
    Eigen::MatrixXd resp = log_joint_impl(data, x2, w, mu, var);
    const Eigen::VectorXd lse = normalize_rows(resp);
    const double avg = lse.mean();
    if (!fit.log_likelihood.empty() && avg - fit.log_likelihood.back() < params.tol) {
      fit.log_likelihood.push_back(avg);
      fit.converged = true;
      break;
    }
    fit.log_likelihood.push_back(avg);
    if (it >= params.max_iters) break;

    // M-step
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    const Eigen::MatrixXd s1 = resp.transpose() * data;
    const Eigen::MatrixXd s2 = resp.transpose() * x2;
    for (int k = 0; k < components; ++k) {
      w(k) = nk(k) / static_cast<double>(n);
      if (w(k) < kCollapsedWeight) {
        Eigen::Index worst = 0;
        lse.minCoeff(&worst);
        warn("GMM component " + std::to_string(k) + " collapsed, re-seeding from the least likely sample");
        mu.row(k) = data.row(worst);
        var.row(k) = data_var.cwiseMax(floor);
        w(k) = 1.0 / static_cast<double>(n);
        ++fit.reseeds;
        continue;
      }
      mu.row(k) = s1.row(k) / nk(k);
      var.row(k) = (s2.row(k) / nk(k) - mu.row(k).cwiseProduct(mu.row(k))).cwiseMax(floor);
    }
    w /= w.sum();
  }
  fit.model = GaussianMixture(w, mu, var);
  return fit;
}

}  // namespace pfm
