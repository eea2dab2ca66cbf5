#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "pfm/gmm.hpp"

namespace pfm {

/// Fisher Vector over mean and variance gradients: all mean blocks first, then all
/// variance blocks, component-major within each half.
struct FisherVector {
  Eigen::VectorXd values;
  bool normalized = false;  // signed square root and L2 normalization applied
  bool empty = false;       // built from zero descriptors; values are all zero
};

constexpr std::size_t fisher_dimension(std::size_t components, std::size_t dim) noexcept {
  return 2 * components * dim;
}

/// Average log-likelihood gradient w.r.t. means and diagonal variances, whitened by the
/// closed-form diagonal Fisher information. `normalize` then applies `apply_ssr_l2`.
FisherVector fisher_vector(const Eigen::Ref<const Eigen::MatrixXd>& descriptors, const GaussianMixture& gmm,
                           bool normalize = true);

/// x -> sign(x) sqrt|x|, then division by the L2 norm. The zero vector maps to itself.
Eigen::VectorXd apply_ssr_l2(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace pfm
