#include "pfm/kinematics.hpp"

#include <cmath>

namespace pfm {

KinematicSample kinematics(double du_dx, double du_dy, double dv_dx, double dv_dy) noexcept {
  KinematicSample s;
  s.div = du_dx + dv_dy;
  s.curl = -du_dy + dv_dx;
  s.hyp1 = du_dx - dv_dy;
  s.hyp2 = du_dy + dv_dx;
  s.shear = std::sqrt(s.hyp1 * s.hyp1 + s.hyp2 * s.hyp2);
  return s;
}

int orientation_bin(double first, double second) noexcept {
  // Rotate into the quadrant [0, pi/2) and split it at the diagonal; every bin is
  // half-open [k pi/4, (k+1) pi/4) without any rounding of an angle.
  double u = first, v = second;
  int quadrant = 0;
  if (u > 0.0 && v >= 0.0) {
    quadrant = 0;
  } else if (u <= 0.0 && v > 0.0) {
    quadrant = 1, u = second, v = -first;
  } else if (u < 0.0 && v <= 0.0) {
    quadrant = 2, u = -first, v = -second;
  } else {
    quadrant = 3, u = -second, v = first;
  }
  return 2 * quadrant + (v >= u ? 1 : 0);
}

void accumulate_pairs(const KinematicSample& s, std::span<float, kCellBlockSize> block, double weight) noexcept {
  const double pairs[kKinematicPairs][2] = {{s.div, s.curl}, {s.div, s.shear}, {s.curl, s.shear}};
  for (int p = 0; p < kKinematicPairs; ++p) {
    const double mag = std::sqrt(pairs[p][0] * pairs[p][0] + pairs[p][1] * pairs[p][1]);
    if (mag == 0.0) continue;
    block[p * kOrientationBins + orientation_bin(pairs[p][0], pairs[p][1])] += static_cast<float>(weight * mag);
  }
}

}  // namespace pfm
