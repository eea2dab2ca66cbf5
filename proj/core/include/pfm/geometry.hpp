#pragma once

#include <algorithm>
#include <optional>
#include <vector>

namespace pfm {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Axis-aligned box with inclusive integer corners.
struct Box {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const noexcept { return x_max - x_min + 1; }
  int height() const noexcept { return y_max - y_min + 1; }
  double area() const noexcept { return static_cast<double>(width()) * height(); }
  Point2 center() const noexcept { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool valid() const noexcept { return x_min < x_max && y_min < y_max; }

  bool contains(const Point2& p) const noexcept {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

double iou(const Box& a, const Box& b) noexcept;

struct FrameBox {
  int frame = 0;
  Box box;
  std::optional<double> score;

  friend bool operator==(const FrameBox&, const FrameBox&) = default;
};

/// Boxes of one subject in one camera view, frame indices strictly increasing.
struct PersonTrack {
  int track_id = 0;
  std::vector<FrameBox> boxes;

  const FrameBox* at_frame(int frame) const noexcept;
  // Box at `frame`, or the temporally closest one when the track has a gap there.
  const FrameBox* nearest(int frame) const noexcept;

  friend bool operator==(const PersonTrack&, const PersonTrack&) = default;
};

}  // namespace pfm
