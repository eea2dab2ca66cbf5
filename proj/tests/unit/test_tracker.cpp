#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "pfm/tracker.hpp"
#include "test_support.hpp"

using namespace pfm;

namespace {

FlowField constant_flow(int w, int h, float u, float v) { return {FloatImage(w, h, u), FloatImage(w, h, v)}; }

Trajectory path_of(std::vector<Point2> points, int start_frame = 0) {
  Trajectory t;
  t.points = std::move(points);
  t.start_frame = start_frame;
  return t;
}

std::vector<Point2> steps(Point2 start, std::vector<Point2> deltas) {
  std::vector<Point2> pts{start};
  for (const auto& d : deltas) pts.push_back({pts.back().x + d.x, pts.back().y + d.y});
  return pts;
}

PersonTrack track_of(int id, int first_frame, int frames, Box box) {
  PersonTrack t{id, {}};
  for (int f = first_frame; f < first_frame + frames; ++f) t.boxes.push_back({f, box, std::nullopt});
  return t;
}

FrameSequence translating_video(int w, int h, int frames, double dx, double dy) {
  const test::Texture tex(17);
  FrameSequence seq;
  seq.width = w;
  seq.height = h;
  for (int f = 0; f < frames; ++f) seq.frames.push_back(test::quantize(tex.render(w, h, dx * f, dy * f)));
  return seq;
}

}  // namespace

TEST(SeedPoints, EmptyActiveSetGivesFullGrid) {
  const auto seeds = seed_points({}, 20, 20, 5);
  ASSERT_EQ(seeds.size(), 16u);
  std::set<std::pair<double, double>> got;
  for (const auto& p : seeds) got.insert({p.x, p.y});
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) EXPECT_TRUE(got.count({2.5 + 5 * i, 2.5 + 5 * j}));
}

TEST(SeedPoints, CoveredGridGivesNothing) {
  const auto full = seed_points({}, 20, 20, 5);
  EXPECT_TRUE(seed_points(full, 20, 20, 5).empty());
}

TEST(SeedPoints, OccupiedCellsAreSkipped) {
  const std::vector<Point2> active{{6.0, 3.0}, {18.9, 19.9}};
  const auto seeds = seed_points(active, 20, 20, 5);
  EXPECT_EQ(seeds.size(), 14u);
  for (const auto& s : seeds) {
    for (const auto& a : active) EXPECT_FALSE(std::abs(s.x - a.x) < 2.5 && std::abs(s.y - a.y) < 2.5);
  }
}

TEST(SeedPoints, StepLargerThanFrameGivesAtMostOne) {
  EXPECT_LE(seed_points({}, 20, 20, 50).size(), 1u);
  EXPECT_LE(seed_points({}, 7, 3, 9).size(), 1u);
  EXPECT_THROW(seed_points({}, 10, 10, 0), std::exception);
}

TEST(Advance, ZeroFlowKeepsThePoint) {
  const auto p = advance({10.3, 7.8}, constant_flow(20, 20, 0, 0));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->x, 10.3);
  EXPECT_EQ(p->y, 7.8);
}

TEST(Advance, ConstantFlowForAnyKernel) {
  for (int k : {1, 3, 5, 7}) {
    const auto p = advance({5, 5}, constant_flow(20, 20, 2, 1), k);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->x, 7.0);
    EXPECT_EQ(p->y, 6.0);
  }
}

TEST(Advance, MedianRejectsOutliers) {
  FlowField f = constant_flow(10, 10, 0, 0);
  // 3x3 around (4, 4): five zeros and four nines
  const int nine[][2] = {{5, 3}, {5, 4}, {5, 5}, {4, 5}};
  for (auto [x, y] : nine) f.u(x, y) = 9.f;
  const auto p = advance({4.2, 3.9}, f, 3);
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->x, 4.2);
}

TEST(Advance, OutsideTheFrameTerminates) {
  EXPECT_FALSE(advance({-0.6, 3.0}, constant_flow(10, 10, 0, 0)));
  EXPECT_FALSE(advance({3.0, 9.6}, constant_flow(10, 10, 0, 0)));
  EXPECT_TRUE(advance({9.4, 9.4}, constant_flow(10, 10, 0, 0)));
}

TEST(Prune, AllEqualPositionsAreStatic) {
  const auto t = path_of(std::vector<Point2>(16, Point2{4, 4}));
  EXPECT_EQ(prune_reason(t, {}, 200.0), PruneReason::Static);
}

TEST(Prune, UnitStepsAreKept) {
  const auto t = path_of(steps({10, 10}, std::vector<Point2>(15, Point2{1, 0})));
  EXPECT_EQ(prune_reason(t, {}, 200.0), PruneReason::Keep);
}

TEST(Prune, SuddenDisplacement) {
  std::vector<Point2> d(14, Point2{0.1, 0});
  d.insert(d.begin() + 7, Point2{30, 0});
  PruneParams p;
  p.max_step = 20.0;
  EXPECT_EQ(prune_reason(path_of(steps({0, 0}, d)), p, 1000.0), PruneReason::SuddenDisplacement);
}

TEST(Prune, DominantStep) {
  std::vector<Point2> d(14, Point2{0.1, 0});
  d.push_back({10, 0});
  PruneParams p;
  p.max_step = 20.0;
  EXPECT_EQ(prune_reason(path_of(steps({0, 0}, d)), p, 1000.0), PruneReason::DominantStep);
}

TEST(Prune, DefaultMaxStepScalesWithDiagonal) {
  // 0.7 * 200 / 20 = 7 px
  const auto t = path_of(steps({0, 0}, std::vector<Point2>(15, Point2{7.5, 0})));
  EXPECT_EQ(prune_reason(t, {}, 200.0), PruneReason::SuddenDisplacement);
  EXPECT_EQ(prune_reason(t, {}, 400.0), PruneReason::Keep);
}

TEST(TrackingScales, StopBeforeThePatchSize) {
  TrackerParams p;
  const auto s = tracking_scales(160, 120, p);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].width, 160);
  EXPECT_NEAR(s[1].scale, 1 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(s[3].height, 42);
  EXPECT_EQ(tracking_scales(640, 480, p).size(), 8u);
}

TEST(LinkDetections, StaticBoxesAreDropped) {
  std::vector<FrameBox> det;
  for (int f = 0; f < 30; ++f) det.push_back({f, {50, 20, 90, 100}, std::nullopt});
  EXPECT_TRUE(link_detections(det).empty());
}

TEST(LinkDetections, MovingBoxFormsOneTrack) {
  std::vector<FrameBox> det;
  for (int f = 0; f < 30; ++f) det.push_back({f, {5 * f, 20, 5 * f + 40, 100}, std::nullopt});
  const auto tracks = link_detections(det);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].boxes.size(), 30u);
}

TEST(LinkDetections, DisjointWalkersStaySeparate) {
  std::vector<FrameBox> det;
  for (int f = 0; f < 30; ++f) {
    det.push_back({f, {5 * f, 10, 5 * f + 30, 60}, std::nullopt});
    det.push_back({f, {300 - 4 * f, 200, 330 - 4 * f, 260}, std::nullopt});
  }
  const auto tracks = link_detections(det);
  ASSERT_EQ(tracks.size(), 2u);
  for (const auto& t : tracks) {
    ASSERT_EQ(t.boxes.size(), 30u);
    const int y = t.boxes[0].box.y_min;
    for (const auto& b : t.boxes) EXPECT_EQ(b.box.y_min, y);
  }
}

TEST(LinkDetections, GapsUpToMaxGapAreBridged) {
  std::vector<FrameBox> det;
  for (int f = 0; f < 40; ++f) {
    if (f >= 10 && f < 14) continue;  // 4 missing frames, gap of 5
    det.push_back({f, {2 * f, 0, 2 * f + 40, 80}, std::nullopt});
  }
  const auto tracks = link_detections(det);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].boxes.size(), 36u);
}

TEST(LinkDetections, ShortTracksAreDropped) {
  std::vector<FrameBox> det;
  for (int f = 0; f < 9; ++f) det.push_back({f, {5 * f, 0, 5 * f + 40, 80}, std::nullopt});
  EXPECT_TRUE(link_detections(det).empty());
}

TEST(FilterByTracks, OutsideIsDroppedInsideIsAssigned) {
  const std::vector<PersonTrack> tracks{track_of(3, 0, 20, {10, 10, 40, 60})};
  const std::vector<Trajectory> trajs{path_of(steps({100, 100}, std::vector<Point2>(15, Point2{1, 0}))),
                                      path_of(steps({12, 20}, std::vector<Point2>(15, Point2{1, 1})))};
  const auto out = filter_by_tracks(trajs, tracks);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].track_id, 3);
  EXPECT_EQ(out[0].trajectories, std::vector<std::size_t>{1});
}

TEST(FilterByTracks, MajorityOfPositionsWins) {
  // positions 0..9 inside A only, 10..14 inside B only, 15 in neither
  const std::vector<PersonTrack> tracks{track_of(1, 0, 20, {0, 0, 19, 50}), track_of(2, 0, 20, {20, 0, 24, 50})};
  std::vector<Point2> pts;
  for (int i = 0; i < 16; ++i) pts.push_back({i < 10 ? 2.0 * i : (i < 15 ? 20.0 + (i - 10) : 40.0), 10.0});
  const std::vector<Trajectory> trajs{path_of(pts)};
  const auto out = filter_by_tracks(trajs, tracks);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].track_id, 1);
}

TEST(FilterByTracks, UsesTheBoxOfTheMatchingFrame) {
  // the box exists only from frame 100 on, the trajectory covers frames 0..15
  const std::vector<PersonTrack> tracks{track_of(1, 100, 20, {0, 0, 100, 100})};
  const std::vector<Trajectory> trajs{path_of(steps({10, 10}, std::vector<Point2>(15, Point2{1, 0})))};
  EXPECT_TRUE(filter_by_tracks(trajs, tracks).empty());
}

TEST(FilterByTracks, ScaledTrajectoriesUseBasePixels) {
  const std::vector<PersonTrack> tracks{track_of(1, 0, 20, {40, 40, 60, 60})};
  Trajectory t = path_of(steps({25, 25}, std::vector<Point2>(15, Point2{0.5, 0})));
  t.scale = 0.5;  // base (50, 50) onwards
  const std::vector<Trajectory> trajs{t};
  EXPECT_EQ(filter_by_tracks(trajs, tracks).size(), 1u);
}

TEST(FilterByTracks, OutputsAreDisjointAndIntersectTheirTrack) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(0, 200), step(-3, 3);
  std::vector<PersonTrack> tracks{track_of(1, 0, 40, {20, 20, 90, 120}), track_of(2, 0, 40, {70, 60, 160, 180}),
                                  track_of(5, 5, 20, {0, 100, 60, 199})};
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 300; ++i) {
    std::vector<Point2> d;
    for (int k = 0; k < 15; ++k) d.push_back({step(rng), step(rng)});
    trajs.push_back(path_of(steps({pos(rng), pos(rng)}, d), static_cast<int>(rng() % 20)));
  }
  const auto out = filter_by_tracks(trajs, tracks);
  std::set<std::size_t> seen;
  for (const auto& a : out) {
    const PersonTrack& track = *std::find_if(tracks.begin(), tracks.end(), [&](auto& t) { return t.track_id == a.track_id; });
    for (auto idx : a.trajectories) {
      EXPECT_TRUE(seen.insert(idx).second);
      bool touches = false;
      for (std::size_t k = 0; k < trajs[idx].points.size(); ++k) {
        const FrameBox* fb = track.at_frame(trajs[idx].frame_of(k));
        touches |= fb && fb->box.contains(trajs[idx].base_point(k));
      }
      EXPECT_TRUE(touches);
    }
  }
  EXPECT_GT(seen.size(), 0u);
}

TEST(ExtractTrajectories, LengthKinematicsAndPruneInvariants) {
  const FrameSequence seq = translating_video(64, 64, 24, 1.0, 0.5);
  TrackerParams tp;
  tp.n_scales = 2;
  const auto result = extract_trajectories(seq, tp, {});
  ASSERT_FALSE(result.trajectories.empty());
  for (const auto& t : result.trajectories) {
    const auto& spec = result.scales.at(static_cast<std::size_t>(t.scale_id));
    EXPECT_EQ(t.points.size(), 16u);
    EXPECT_EQ(t.kinematic_samples.size(), t.points.size() - 1);
    EXPECT_EQ(t.neighborhood.size(), t.points.size() - 1);
    EXPECT_EQ(t.status, TrajectoryStatus::Complete);
    EXPECT_TRUE(prune_keeps(t, tp.prune, std::hypot(spec.width, spec.height)));
    const double dx = t.base_point(15).x - t.base_point(0).x, dy = t.base_point(15).y - t.base_point(0).y;
    EXPECT_NEAR(dx, 15.0, 2.0);
    EXPECT_NEAR(dy, 7.5, 2.0);
  }
}

TEST(ExtractTrajectories, ReplayThroughAdvanceIsExact) {
  const FrameSequence seq = translating_video(48, 40, 20, -0.8, 0.6);
  TrackerParams tp;
  tp.n_scales = 1;
  std::map<std::pair<int, int>, FlowField> flows;
  const auto result = extract_trajectories(seq, tp, {}, [&](int s, int f, const FlowField& flow) { flows[{s, f}] = flow; });
  ASSERT_FALSE(result.trajectories.empty());
  for (const auto& t : result.trajectories) {
    for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
      const auto next = advance(t.points[i], flows.at({t.scale_id, t.frame_of(i)}), tp.median_kernel);
      ASSERT_TRUE(next);
      EXPECT_EQ(next->x, t.points[i + 1].x);
      EXPECT_EQ(next->y, t.points[i + 1].y);
    }
  }
}

TEST(ScaleTracker, SeedsOnEveryFrameAndRejectsWrongSizes) {
  ScaleTracker st({0, 1.0, 40, 40}, {});
  EXPECT_EQ(st.active().size(), 64u);
  st.push(constant_flow(40, 40, 5.0f, 0.0f));
  EXPECT_EQ(st.frame(), 1);
  EXPECT_EQ(st.lost(), 8u);             // the right column leaves the frame
  EXPECT_EQ(st.active().size(), 64u);  // and the vacated left column is reseeded
  EXPECT_THROW(st.push(constant_flow(30, 40, 0, 0)), std::exception);
}
