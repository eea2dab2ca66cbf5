#pragma once

#include <array>

#include "pfm/geometry.hpp"
#include "pfm/kinematics.hpp"
#include "pfm/tracker.hpp"

namespace pfm {

// Local motion descriptor layout:
//   [0, 30)    trajectory shape: 15 displacements normalized by the summed step length
//   [30, 318)  12 cells (3 temporal x 2x2 spatial, temporal-major) x 24-bin kinematic blocks
inline constexpr int kShapeDim = 30;
inline constexpr int kTemporalCells = 3;
inline constexpr int kHistogramDim = kTemporalCells * kSpatialCells * kCellBlockSize;  // 288
inline constexpr int kDescriptorDim = kShapeDim + kHistogramDim;                      // 318
inline constexpr int kDescriptorLength = 15;  // trajectory steps the layout is built for
inline constexpr double kBlockEpsilon = 1e-6;

struct DescriptorSource {
  int subject = -1;
  int trajectory = -1;
  int view = -1;
  int track = -1;
  int start_frame = 0;
  int scale = 0;

  friend bool operator==(const DescriptorSource&, const DescriptorSource&) = default;
};

struct TrajectoryDescriptor {
  std::array<float, kDescriptorDim> values{};
  DescriptorSource source;
  Point2 mean_position;  // base-image pixels
  int middle_frame = 0;  // frame of the middle trajectory position

  std::span<const float, kShapeDim> shape() const { return std::span(values).first<kShapeDim>(); }
  std::span<const float, kCellBlockSize> cell_block(int temporal, int spatial) const {
    return std::span(values).subspan(kShapeDim + (temporal * kSpatialCells + spatial) * kCellBlockSize)
        .first<kCellBlockSize>();
  }
};

/// Builds the 318-d descriptor of a complete 15-step trajectory. Throws when every
/// displacement is zero.
TrajectoryDescriptor describe_trajectory(const Trajectory& trajectory);

}  // namespace pfm
