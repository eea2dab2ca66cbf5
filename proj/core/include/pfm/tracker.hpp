#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pfm/geometry.hpp"
#include "pfm/kinematics.hpp"
#include "pfm/optflow.hpp"
#include "pfm/videoio.hpp"

namespace pfm {

struct PruneParams {
  double min_std = 0.7;            // static if the positions' total std falls below this (px)
  double max_step = 0.0;           // largest allowed single step (px); <= 0 uses 0.7 * diagonal / 20
  double dominant_fraction = 0.7;  // no single step may exceed this share of the path length
};

struct TrackerParams {
  int sample_step = 5;
  int n_scales = 8;
  double scale_factor = 0.70710678118654752;  // 1/sqrt(2)
  int traj_length = 15;
  int median_kernel = 3;
  int patch_size = 32;  // kinematic neighborhood side, tracking-scale pixels
  PruneParams prune;
};

enum class TrajectoryStatus { Growing, Complete, Discarded };

enum class PruneReason { Keep, Static, SuddenDisplacement, DominantStep };

inline constexpr int kSpatialCells = 4;  // 2x2
inline constexpr int kNeighborhoodSize = kSpatialCells * kCellBlockSize;
using NeighborhoodHistogram = std::array<float, kNeighborhoodSize>;

/// One densely sampled point followed for up to L frames.
struct Trajectory {
  std::vector<Point2> points;  // tracking-scale pixel coordinates
  int start_frame = 0;
  int scale_id = 0;
  double scale = 1.0;  // tracking coordinates = base coordinates * scale
  std::vector<KinematicSample> kinematic_samples;       // one per step, at points[i]
  std::vector<NeighborhoodHistogram> neighborhood;      // one per step, 2x2 cells x 24 bins
  TrajectoryStatus status = TrajectoryStatus::Growing;

  Point2 base_point(std::size_t i) const noexcept { return {points[i].x / scale, points[i].y / scale}; }
  int frame_of(std::size_t i) const noexcept { return start_frame + static_cast<int>(i); }
  int end_frame() const noexcept { return start_frame + static_cast<int>(points.size()) - 1; }
};

/// Grid cell centers (step/2 + i*step) of cells holding none of the `active` points.
std::vector<Point2> seed_points(std::span<const Point2> active, int width, int height, int step);

/// Median over a k x k window (replicated edges) of u and v at the rounded position.
/// Returns nothing when the rounded position lies outside the flow field.
std::optional<Point2> advance(const Point2& point, const FlowField& flow, int median_kernel = 3);

PruneReason prune_reason(const Trajectory& trajectory, const PruneParams& params, double frame_diagonal);
inline bool prune_keeps(const Trajectory& t, const PruneParams& p, double diagonal) {
  return prune_reason(t, p, diagonal) == PruneReason::Keep;
}

struct ScaleSpec {
  int scale_id = 0;
  double scale = 1.0;
  int width = 0;
  int height = 0;
};

/// Scales factor^s for s < n_scales, stopping before either side drops below the
/// neighborhood patch or the minimum flow size.
std::vector<ScaleSpec> tracking_scales(int width, int height, const TrackerParams& params);

/// Frame-sequential dense tracking at one scale.
class ScaleTracker {
 public:
  ScaleTracker(ScaleSpec spec, TrackerParams params);

  /// Consumes the flow from the current frame to the next one.
  void push(const FlowField& flow);

  const std::vector<Trajectory>& finished() const noexcept { return finished_; }
  std::vector<Trajectory> take_finished() { return std::move(finished_); }
  const std::vector<Trajectory>& active() const noexcept { return active_; }
  std::size_t pruned() const noexcept { return pruned_; }
  std::size_t lost() const noexcept { return lost_; }
  int frame() const noexcept { return frame_; }

 private:
  void seed();

  ScaleSpec spec_;
  TrackerParams params_;
  int frame_ = 0;
  std::vector<Trajectory> active_;
  std::vector<Trajectory> finished_;  // complete and kept by prune
  std::size_t pruned_ = 0;
  std::size_t lost_ = 0;
};

struct TrackingResult {
  std::vector<Trajectory> trajectories;  // complete, kept by prune
  std::size_t pruned = 0;
  std::size_t lost = 0;
  std::vector<ScaleSpec> scales;
};

using FlowObserver = std::function<void(int scale_id, int frame, const FlowField& flow)>;

TrackingResult extract_trajectories(const FrameSequence& sequence, const TrackerParams& tracker,
                                    const FlowParams& flow, const FlowObserver& observer = {});

// Detection linking and trajectory-to-person filtering.

struct LinkParams {
  double iou_threshold = 0.4;
  int max_gap = 5;
  int min_track_length = 10;
  double static_displacement_threshold = 10.0;  // px, largest center offset from the first box
};

/// Greedy IoU association of per-frame detections into tracks, then removal of short and static tracks.
std::vector<PersonTrack> link_detections(std::span<const FrameBox> detections, const LinkParams& params = {});

/// Largest distance between the first box center and any later box center.
double track_displacement(const PersonTrack& track) noexcept;

struct TrackAssignment {
  int track_id = 0;
  std::vector<std::size_t> trajectories;  // indices into the input span
};

/// Assigns each trajectory to the track whose boxes contain most of its positions;
/// trajectories touching no box are dropped.
std::vector<TrackAssignment> filter_by_tracks(std::span<const Trajectory> trajectories,
                                              std::span<const PersonTrack> tracks);

}  // namespace pfm
