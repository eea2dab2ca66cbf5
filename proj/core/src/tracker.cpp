#include "pfm/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pfm/error.hpp"

namespace pfm {

namespace {

int round_coord(double v) noexcept { return static_cast<int>(std::floor(v + 0.5)); }

float median_at(const FloatImage& f, int cx, int cy, int k) {
  const int r = k / 2;
  float window[49] = {};
  std::vector<float> big;
  float* buf = window;
  if (k * k > 49) {
    big.resize(static_cast<std::size_t>(k) * k);
    buf = big.data();
  }
  int n = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) buf[n++] = f.clamped(cx + dx, cy + dy);
  std::nth_element(buf, buf + n / 2, buf + n);
  return buf[n / 2];
}

// Integral image of per-pixel 24-bin kinematic votes.
class KinematicIntegral {
 public:
  KinematicIntegral(const FlowGradients& g) : w_(g.du_dx.width()), h_(g.du_dx.height()) {
    data_.assign(static_cast<std::size_t>(w_ + 1) * (h_ + 1) * kCellBlockSize, 0.0);
    std::array<double, kCellBlockSize> rowsum;
    for (int y = 0; y < h_; ++y) {
      rowsum.fill(0.0);
      for (int x = 0; x < w_; ++x) {
        const KinematicSample s = kinematics(g.du_dx(x, y), g.du_dy(x, y), g.dv_dx(x, y), g.dv_dy(x, y));
        const double pairs[kKinematicPairs][2] = {{s.div, s.curl}, {s.div, s.shear}, {s.curl, s.shear}};
        for (int p = 0; p < kKinematicPairs; ++p) {
          const double mag = std::sqrt(pairs[p][0] * pairs[p][0] + pairs[p][1] * pairs[p][1]);
          if (mag == 0.0) continue;
          // Same float rounding as accumulate_pairs.
          rowsum[p * kOrientationBins + orientation_bin(pairs[p][0], pairs[p][1])] += static_cast<float>(mag);
        }
        const double* above = at(x + 1, y);
        double* out = at(x + 1, y + 1);
        for (int c = 0; c < kCellBlockSize; ++c) out[c] = above[c] + rowsum[c];
      }
    }
  }

  void box_sum(int x0, int y0, int x1, int y1, float* out) const {
    const double* a = at(x0, y0);
    const double* b = at(x1, y0);
    const double* c = at(x0, y1);
    const double* d = at(x1, y1);
    for (int i = 0; i < kCellBlockSize; ++i) out[i] = static_cast<float>(d[i] - b[i] - c[i] + a[i]);
  }

 private:
  double* at(int x, int y) { return data_.data() + (static_cast<std::size_t>(y) * (w_ + 1) + x) * kCellBlockSize; }
  const double* at(int x, int y) const {
    return data_.data() + (static_cast<std::size_t>(y) * (w_ + 1) + x) * kCellBlockSize;
  }

  int w_, h_;
  std::vector<double> data_;
};

}  // namespace

std::vector<Point2> seed_points(std::span<const Point2> active, int width, int height, int step) {
  if (step < 1) throw Error(ErrorKind::InvalidArgument, "sample step must be >= 1");
  const double half = step / 2.0;
  int cols = 0, rows = 0;
  while (half + cols * step < width) ++cols;
  while (half + rows * step < height) ++rows;
  std::vector<char> occupied(static_cast<std::size_t>(cols) * rows, 0);
  for (const auto& p : active) {
    const int cx = static_cast<int>(std::floor(p.x / step));
    const int cy = static_cast<int>(std::floor(p.y / step));
    if (cx >= 0 && cy >= 0 && cx < cols && cy < rows) occupied[static_cast<std::size_t>(cy) * cols + cx] = 1;
  }
  std::vector<Point2> seeds;
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i)
      if (!occupied[static_cast<std::size_t>(j) * cols + i]) seeds.push_back({half + i * step, half + j * step});
  return seeds;
}

std::optional<Point2> advance(const Point2& point, const FlowField& flow, int median_kernel) {
  const int x = round_coord(point.x), y = round_coord(point.y);
  if (x < 0 || y < 0 || x >= flow.width() || y >= flow.height()) return std::nullopt;
  const int k = std::max(1, median_kernel | 1);
  return Point2{point.x + median_at(flow.u, x, y, k), point.y + median_at(flow.v, x, y, k)};
}

PruneReason prune_reason(const Trajectory& t, const PruneParams& params, double frame_diagonal) {
  const auto& pts = t.points;
  const double n = static_cast<double>(pts.size());
  if (pts.size() < 2) return PruneReason::Static;
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double var = 0;
  for (const auto& p : pts) var += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  var /= n;
  if (var < params.min_std * params.min_std) return PruneReason::Static;

  const double max_step = params.max_step > 0.0 ? params.max_step : 0.7 * frame_diagonal / 20.0;
  double path = 0, largest = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
    path += d;
    largest = std::max(largest, d);
  }
  if (largest > max_step) return PruneReason::SuddenDisplacement;
  if (largest > params.dominant_fraction * path) return PruneReason::DominantStep;
  return PruneReason::Keep;
}

std::vector<ScaleSpec> tracking_scales(int width, int height, const TrackerParams& params) {
  const int min_side = std::max(params.patch_size, kMinFlowSize);
  std::vector<ScaleSpec> scales;
  double scale = 1.0;
  for (int s = 0; s < params.n_scales; ++s, scale *= params.scale_factor) {
    const int w = static_cast<int>(std::lround(width * scale));
    const int h = static_cast<int>(std::lround(height * scale));
    if (w < min_side || h < min_side) break;
    scales.push_back({s, scale, w, h});
  }
  return scales;
}

ScaleTracker::ScaleTracker(ScaleSpec spec, TrackerParams params) : spec_(spec), params_(params) {
  if (params_.traj_length < 1) throw Error(ErrorKind::InvalidArgument, "trajectory length must be >= 1");
  seed();
}

void ScaleTracker::seed() {
  std::vector<Point2> current;
  current.reserve(active_.size());
  for (const auto& t : active_) current.push_back(t.points.back());
  for (const auto& p : seed_points(current, spec_.width, spec_.height, params_.sample_step)) {
    Trajectory t;
    t.points.push_back(p);
    t.start_frame = frame_;
    t.scale_id = spec_.scale_id;
    t.scale = spec_.scale;
    active_.push_back(std::move(t));
  }
}

void ScaleTracker::push(const FlowField& flow) {
  if (flow.width() != spec_.width || flow.height() != spec_.height) {
    throw Error(ErrorKind::DimensionMismatch, "flow size does not match tracking scale");
  }
  const FlowGradients grad = flow_gradients(flow);
  const KinematicIntegral integral(grad);
  const int w = spec_.width, h = spec_.height;
  const int pw = std::min(params_.patch_size, w), ph = std::min(params_.patch_size, h);
  const double diagonal = std::hypot(w, h);

  std::vector<Trajectory> still_active;
  still_active.reserve(active_.size());
  for (auto& t : active_) {
    const Point2 p = t.points.back();
    const int x = round_coord(p.x), y = round_coord(p.y);
    if (x < 0 || y < 0 || x >= w || y >= h) {
      t.status = TrajectoryStatus::Discarded;
      ++lost_;
      continue;
    }
    t.kinematic_samples.push_back(
        kinematics(grad.du_dx(x, y), grad.du_dy(x, y), grad.dv_dx(x, y), grad.dv_dy(x, y)));

    const int x0 = std::clamp(x - pw / 2, 0, w - pw);
    const int y0 = std::clamp(y - ph / 2, 0, h - ph);
    const int xs[3] = {x0, x0 + pw / 2, x0 + pw};
    const int ys[3] = {y0, y0 + ph / 2, y0 + ph};
    NeighborhoodHistogram hist;
    for (int cy = 0; cy < 2; ++cy)
      for (int cx = 0; cx < 2; ++cx)
        integral.box_sum(xs[cx], ys[cy], xs[cx + 1], ys[cy + 1], hist.data() + (cy * 2 + cx) * kCellBlockSize);
    t.neighborhood.push_back(hist);

    const auto next = advance(p, flow, params_.median_kernel);
    const bool inside = next && round_coord(next->x) >= 0 && round_coord(next->y) >= 0 &&
                        round_coord(next->x) < w && round_coord(next->y) < h;
    if (!inside) {
      t.status = TrajectoryStatus::Discarded;
      ++lost_;
      continue;
    }
    t.points.push_back(*next);
    if (static_cast<int>(t.points.size()) == params_.traj_length + 1) {
      t.status = TrajectoryStatus::Complete;
      if (prune_keeps(t, params_.prune, diagonal)) {
        finished_.push_back(std::move(t));
      } else {
        ++pruned_;
      }
      continue;
    }
    still_active.push_back(std::move(t));
  }
  active_ = std::move(still_active);
  ++frame_;
  seed();
}

TrackingResult extract_trajectories(const FrameSequence& sequence, const TrackerParams& tracker,
                                    const FlowParams& flow_params, const FlowObserver& observer) {
  if (sequence.frames.size() < 2) throw Error(ErrorKind::InsufficientData, "need at least 2 frames");
  TrackingResult result;
  result.scales = tracking_scales(sequence.width, sequence.height, tracker);
  if (result.scales.empty()) {
    throw Error(ErrorKind::InvalidArgument, "frames of " + std::to_string(sequence.width) + "x" +
                                                std::to_string(sequence.height) + " are too small to track");
  }
  std::vector<FloatImage> base;
  base.reserve(sequence.frames.size());
  for (const auto& f : sequence.frames) base.push_back(to_float(f));

  for (const auto& spec : result.scales) {
    std::vector<FloatImage> frames;
    frames.reserve(base.size());
    for (const auto& f : base) {
      frames.push_back(spec.scale_id == 0 ? f
                                          : resize_bilinear(gaussian_blur(f, 0.5 * (1.0 / spec.scale - 1.0)),
                                                            spec.width, spec.height));
    }
    ScaleTracker st(spec, tracker);
    FlowFrame prev = prepare_flow_frame(frames[0], flow_params);
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
      FlowFrame next = prepare_flow_frame(frames[t + 1], flow_params);
      const FlowField flow = compute_flow(prev, next, flow_params);
      prev = std::move(next);
      if (observer) observer(spec.scale_id, static_cast<int>(t), flow);
      st.push(flow);
    }
    result.pruned += st.pruned();
    result.lost += st.lost();
    auto done = st.take_finished();
    result.trajectories.insert(result.trajectories.end(), std::make_move_iterator(done.begin()),
                               std::make_move_iterator(done.end()));
  }
  return result;
}

}  // namespace pfm
