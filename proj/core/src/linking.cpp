#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pfm/geometry.hpp"
#include "pfm/tracker.hpp"

namespace pfm {

double iou(const Box& a, const Box& b) noexcept {
  const int iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min) + 1;
  const int ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min) + 1;
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = static_cast<double>(iw) * ih;
  return inter / (a.area() + b.area() - inter);
}

const FrameBox* PersonTrack::at_frame(int frame) const noexcept {
  const auto it = std::lower_bound(boxes.begin(), boxes.end(), frame,
                                   [](const FrameBox& fb, int f) { return fb.frame < f; });
  return it != boxes.end() && it->frame == frame ? &*it : nullptr;
}

const FrameBox* PersonTrack::nearest(int frame) const noexcept {
  if (boxes.empty()) return nullptr;
  const auto it = std::lower_bound(boxes.begin(), boxes.end(), frame,
                                   [](const FrameBox& fb, int f) { return fb.frame < f; });
  if (it == boxes.end()) return &boxes.back();
  if (it->frame == frame || it == boxes.begin()) return &*it;
  const auto prev = std::prev(it);
  // equidistant gaps resolve to the earlier box
  return (frame - prev->frame) <= (it->frame - frame) ? &*prev : &*it;
}

double track_displacement(const PersonTrack& track) noexcept {
  if (track.boxes.empty()) return 0.0;
  const Point2 first = track.boxes.front().box.center();
  double best = 0.0;
  for (const auto& fb : track.boxes) {
    const Point2 c = fb.box.center();
    best = std::max(best, std::hypot(c.x - first.x, c.y - first.y));
  }
  return best;
}

std::vector<PersonTrack> link_detections(std::span<const FrameBox> detections, const LinkParams& params) {
  std::vector<FrameBox> sorted(detections.begin(), detections.end());
  // Within a frame, higher-scored detections claim tracks first.
  std::stable_sort(sorted.begin(), sorted.end(), [](const FrameBox& a, const FrameBox& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.score.value_or(0.0) > b.score.value_or(0.0);
  });

  std::vector<PersonTrack> tracks;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const int frame = sorted[i].frame;
    std::vector<char> extended(tracks.size(), 0);
    for (; i < sorted.size() && sorted[i].frame == frame; ++i) {
      const FrameBox& det = sorted[i];
      int best = -1;
      double best_iou = params.iou_threshold;
      for (std::size_t t = 0; t < extended.size(); ++t) {
        if (extended[t]) continue;
        const FrameBox& last = tracks[t].boxes.back();
        const int gap = frame - last.frame;
        if (gap < 1 || gap > params.max_gap) continue;
        const double overlap = iou(last.box, det.box);
        if (overlap >= best_iou && (best < 0 || overlap > best_iou)) {
          best = static_cast<int>(t);
          best_iou = overlap;
        }
      }
      if (best >= 0) {
        tracks[best].boxes.push_back(det);
        extended[best] = 1;
      } else {
        tracks.push_back(PersonTrack{static_cast<int>(tracks.size()), {det}});
      }
    }
  }

  std::vector<PersonTrack> kept;
  for (auto& t : tracks) {
    if (static_cast<int>(t.boxes.size()) < params.min_track_length) continue;
    if (track_displacement(t) < params.static_displacement_threshold) continue;
    t.track_id = static_cast<int>(kept.size());
    kept.push_back(std::move(t));
  }
  return kept;
}

std::vector<TrackAssignment> filter_by_tracks(std::span<const Trajectory> trajectories,
                                              std::span<const PersonTrack> tracks) {
  std::map<int, std::vector<std::size_t>> by_track;
  std::vector<int> counts(tracks.size());
  for (std::size_t ti = 0; ti < trajectories.size(); ++ti) {
    const Trajectory& traj = trajectories[ti];
    std::fill(counts.begin(), counts.end(), 0);
    double xmin = std::numeric_limits<double>::max(), ymin = xmin;
    double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
    for (std::size_t k = 0; k < traj.points.size(); ++k) {
      const Point2 p = traj.base_point(k);
      xmin = std::min(xmin, p.x);
      ymin = std::min(ymin, p.y);
      xmax = std::max(xmax, p.x);
      ymax = std::max(ymax, p.y);
      for (std::size_t j = 0; j < tracks.size(); ++j) {
        const FrameBox* fb = tracks[j].at_frame(traj.frame_of(k));
        if (fb && fb->box.contains(p)) ++counts[j];
      }
    }
    const int top = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    if (top == 0) continue;

    // Ties: the track whose box overlaps the trajectory's extent the most, then the lowest index.
    const Box extent{static_cast<int>(std::floor(xmin)), static_cast<int>(std::floor(ymin)),
                     static_cast<int>(std::ceil(xmax)), static_cast<int>(std::ceil(ymax))};
    int winner = -1;
    double winner_iou = -1.0;
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      if (counts[j] != top) continue;
      double overlap = 0.0;
      for (std::size_t k = 0; k < traj.points.size(); ++k) {
        if (const FrameBox* fb = tracks[j].at_frame(traj.frame_of(k))) overlap = std::max(overlap, iou(fb->box, extent));
      }
      if (overlap > winner_iou) {
        winner = static_cast<int>(j);
        winner_iou = overlap;
      }
    }
    by_track[tracks[winner].track_id].push_back(ti);
  }
  std::vector<TrackAssignment> out;
  for (auto& [id, idx] : by_track) out.push_back({id, std::move(idx)});
  return out;
}

}  // namespace pfm
