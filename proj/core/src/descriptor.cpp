#include "pfm/descriptor.hpp"

#include <cmath>

#include "pfm/error.hpp"

namespace pfm {

TrajectoryDescriptor describe_trajectory(const Trajectory& t) {
  constexpr std::size_t steps = kDescriptorLength;
  if (t.points.size() != steps + 1 || t.neighborhood.size() != steps) {
    throw Error(ErrorKind::InvalidArgument, "descriptor needs a complete 15-step trajectory, got " +
                                                std::to_string(t.points.size()) + " positions");
  }
  TrajectoryDescriptor d;

  double path = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    path += std::hypot(t.points[i + 1].x - t.points[i].x, t.points[i + 1].y - t.points[i].y);
  }
  if (path <= 0.0) throw Error(ErrorKind::InvalidArgument, "zero-length trajectory shape");
  for (std::size_t i = 0; i < steps; ++i) {
    d.values[2 * i] = static_cast<float>((t.points[i + 1].x - t.points[i].x) / path);
    d.values[2 * i + 1] = static_cast<float>((t.points[i + 1].y - t.points[i].y) / path);
  }

  std::array<double, kHistogramDim> hist{};
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t temporal = i * kTemporalCells / steps;
    for (int c = 0; c < kNeighborhoodSize; ++c) {
      hist[temporal * kNeighborhoodSize + c] += t.neighborhood[i][c];
    }
  }
  for (int block = 0; block < kTemporalCells * kSpatialCells; ++block) {
    double norm = 0.0;
    for (int c = 0; c < kCellBlockSize; ++c) norm += hist[block * kCellBlockSize + c] * hist[block * kCellBlockSize + c];
    norm = std::sqrt(norm) + kBlockEpsilon;
    for (int c = 0; c < kCellBlockSize; ++c) {
      d.values[kShapeDim + block * kCellBlockSize + c] = static_cast<float>(hist[block * kCellBlockSize + c] / norm);
    }
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const Point2 p = t.base_point(i);
    mx += p.x;
    my += p.y;
  }
  d.mean_position = {mx / t.points.size(), my / t.points.size()};
  d.middle_frame = t.frame_of((t.points.size() - 1) / 2);
  d.source.start_frame = t.start_frame;
  d.source.scale = t.scale_id;
  return d;
}

}  // namespace pfm
