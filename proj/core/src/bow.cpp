#include "pfm/bow.hpp"

namespace pfm {

BowHistogram bow_encode(const Eigen::Ref<const Eigen::MatrixXd>& descriptors, const Codebook& codebook) {
  BowHistogram h{Eigen::VectorXd::Zero(codebook.size()), descriptors.rows() == 0};
  if (h.empty) return h;
  const Eigen::VectorXi assign = nearest_centroids(descriptors, codebook.centroids);
  for (Eigen::Index i = 0; i < assign.size(); ++i) h.values(assign(i)) += 1.0;
  h.values /= static_cast<double>(assign.size());
  h.values = h.values.cwiseSqrt();
  return h;
}

}  // namespace pfm
