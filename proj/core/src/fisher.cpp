#include "pfm/fisher.hpp"

#include <cmath>

#include "pfm/error.hpp"

namespace pfm {

Eigen::VectorXd apply_ssr_l2(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::VectorXd out = v.unaryExpr([](double x) { return std::copysign(std::sqrt(std::abs(x)), x); });
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;
  return out;
}

FisherVector fisher_vector(const Eigen::Ref<const Eigen::MatrixXd>& x, const GaussianMixture& gmm, bool normalize) {
  const Eigen::Index n_comp = gmm.components(), d = gmm.dim();
  if (x.rows() > 0 && x.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "descriptor dimension " + std::to_string(x.cols()) +
                                                  " does not match GMM dimension " + std::to_string(d));
  }
  FisherVector fv;
  fv.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fisher_dimension(n_comp, d)));
  fv.normalized = normalize;
  if (x.rows() == 0) {
    fv.empty = true;
    return fv;
  }
  const double t = static_cast<double>(x.rows());
  const Eigen::MatrixXd gamma = gmm.posteriors(x);
  const Eigen::VectorXd s0 = gamma.colwise().sum().transpose();
  const Eigen::MatrixXd s1 = gamma.transpose() * x;
  const Eigen::MatrixXd s2 = gamma.transpose() * x.array().square().matrix();

  for (Eigen::Index k = 0; k < n_comp; ++k) {
    const double wk = gmm.weights()(k);
    const auto mu = gmm.means().row(k).array();
    const auto var = gmm.variances().row(k).array();
    const auto sigma = var.sqrt();
    // sum_t g_tk (x_t - mu_k) and sum_t g_tk ((x_t - mu_k)^2 - var_k)
    const Eigen::ArrayXXd m1 = s1.row(k).array() - s0(k) * mu;
    const Eigen::ArrayXXd m2 = s2.row(k).array() - 2.0 * mu * s1.row(k).array() + s0(k) * (mu.square() - var);
    fv.values.segment(k * d, d) = (m1 / (t * std::sqrt(wk) * sigma)).matrix().transpose();
    fv.values.segment((n_comp + k) * d, d) = (m2 / (t * std::sqrt(2.0 * wk) * var)).matrix().transpose();
  }
  if (normalize) fv.values = apply_ssr_l2(fv.values);
  return fv;
}

}  // namespace pfm
