#pragma once

#include <array>
#include <span>

namespace pfm {

/// First-order differential invariants of the flow at one point, 1/frame units.
struct KinematicSample {
  double div = 0.0;
  double curl = 0.0;
  double hyp1 = 0.0;
  double hyp2 = 0.0;
  double shear = 0.0;

  friend bool operator==(const KinematicSample&, const KinematicSample&) = default;
};

KinematicSample kinematics(double du_dx, double du_dy, double dv_dx, double dv_dy) noexcept;

// Joint orientation histograms over (div,curl), (div,shear), (curl,shear).
inline constexpr int kOrientationBins = 8;
inline constexpr int kKinematicPairs = 3;
inline constexpr int kCellBlockSize = kOrientationBins * kKinematicPairs;  // 24

/// Bin of the angle atan2(second, first) among 8 uniform half-open bins over [0, 2pi).
int orientation_bin(double first, double second) noexcept;

/// Adds the magnitude-weighted votes of `s` into a 24-value cell block.
void accumulate_pairs(const KinematicSample& s, std::span<float, kCellBlockSize> block, double weight = 1.0) noexcept;

}  // namespace pfm
