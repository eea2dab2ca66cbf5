#include "pfm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "pfm/error.hpp"
#include "pfm/parallel.hpp"

namespace pfm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDepthScale = 400.0;
constexpr float kBackground = 16.0f;

double rad(double deg) { return deg * kPi / 180.0; }

struct Pose2 {
  double x = 0.0;  // ground plane, world X
  double z = 0.0;  // ground plane, world Z
  double heading = 0.0;
};

Pose2 path_pose(const SynthSpec& spec, const GaitParams& gait, const PathSpec& path, int frame) {
  const double s = gait.speed * (frame - 0.5 * (spec.frames - 1));
  const double h0 = rad(path.heading_deg);
  if (path.shape == PathShape::Straight) return {s * std::cos(h0), s * std::sin(h0), h0};
  const double r = path.radius * path.turn;
  const double h = h0 + s / r;
  return {r * (std::sin(h) - std::sin(h0)), -r * (std::cos(h) - std::cos(h0)), h};
}

// Body joints in the walker frame: (forward, lateral, up).
struct Local {
  double a = 0.0, b = 0.0, c = 0.0;
};

std::array<Local, kJointCount> body_joints(const GaitParams& g, double t) {
  const double h = g.body_height;
  const double phase = 2.0 * kPi * g.stride_hz * t;
  const double swing = g.limb_amplitude / (0.5 * h);
  std::array<Local, kJointCount> j{};
  const double sway = g.torso_sway * std::sin(phase);
  const Local pelvis{0.0, sway, 0.5 * h + 0.02 * h * std::cos(2.0 * phase)};
  j[static_cast<int>(Joint::Pelvis)] = pelvis;
  j[static_cast<int>(Joint::Neck)] = {0.03 * h, sway, pelvis.c + 0.3 * h};
  j[static_cast<int>(Joint::Head)] = {0.04 * h, sway, pelvis.c + 0.4 * h};

  const auto leg = [&](double psi, double side, Joint knee_id, Joint ankle_id) {
    const double theta = swing * std::sin(psi);
    const double knee_flex = g.knee_lift * std::max(0.0, std::cos(psi));
    const double seg = 0.25 * h;
    const Local knee{seg * std::sin(theta), sway + side, pelvis.c - seg * std::cos(theta)};
    const Local ankle{knee.a + seg * std::sin(theta - knee_flex), knee.b, knee.c - seg * std::cos(theta - knee_flex)};
    j[static_cast<int>(knee_id)] = knee;
    j[static_cast<int>(ankle_id)] = ankle;
  };
  leg(phase, 0.06 * h, Joint::LeftKnee, Joint::LeftAnkle);
  leg(phase + kPi, -0.06 * h, Joint::RightKnee, Joint::RightAnkle);

  const auto arm = [&](double psi, double side, Joint hand_id) {
    const double beta = -g.arm_ratio * swing * std::sin(psi);
    const double len = 0.32 * h;
    const Local shoulder{0.03 * h, sway + side, pelvis.c + 0.27 * h};
    j[static_cast<int>(hand_id)] = {shoulder.a + len * std::sin(beta + 0.15), shoulder.b,
                                     shoulder.c - len * std::cos(beta + 0.15)};
  };
  arm(phase, 0.09 * h, Joint::LeftHand);
  arm(phase + kPi, -0.09 * h, Joint::RightHand);
  return j;
}

struct Projector {
  double cos_az, sin_az, scale, cx, cy, half_height;
  Pose2 pose;

  Point2 operator()(const Local& p) const {
    const double x = pose.x + p.a * std::cos(pose.heading) - p.b * std::sin(pose.heading);
    const double z = pose.z + p.a * std::sin(pose.heading) + p.b * std::cos(pose.heading);
    return {cx + (x * cos_az + z * sin_az) * scale, cy + (half_height - p.c) * scale};
  }
};

Projector make_projector(const SynthSpec& spec, const GaitParams& gait, const PathSpec& path, double azimuth_deg,
                         int frame) {
  const Pose2 pose = path_pose(spec, gait, path, frame);
  const double az = rad(azimuth_deg);
  // Weak perspective: one depth scale per frame, taken at the body root.
  const double depth = -pose.x * std::sin(az) + pose.z * std::cos(az);
  return {std::cos(az), std::sin(az), 1.0 / (1.0 + depth / kDepthScale), 0.5 * spec.width, 0.5 * spec.height,
          0.5 * gait.body_height, pose};
}

struct Stroke {
  Joint from, to;
  double sigma;  // fraction of body height
  float intensity;
};

// Far side first; max compositing makes the order irrelevant anyway.
constexpr std::array<Stroke, 9> kStrokes{{
    {Joint::Pelvis, Joint::RightKnee, 0.035, 130.0f},
    {Joint::RightKnee, Joint::RightAnkle, 0.03, 125.0f},
    {Joint::Neck, Joint::RightHand, 0.028, 115.0f},
    {Joint::Pelvis, Joint::Neck, 0.075, 190.0f},
    {Joint::Head, Joint::Head, 0.065, 225.0f},
    {Joint::Pelvis, Joint::LeftKnee, 0.035, 170.0f},
    {Joint::LeftKnee, Joint::LeftAnkle, 0.03, 160.0f},
    {Joint::Neck, Joint::LeftHand, 0.028, 150.0f},
    {Joint::Pelvis, Joint::Pelvis, 0.06, 180.0f},
}};

void splat(FloatImage& img, Point2 c, double sigma, float intensity) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - r);
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(c.x)) + r);
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - r);
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(c.y)) + r);
  const double inv = -0.5 / (sigma * sigma);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
      const float v = kBackground + (intensity - kBackground) * static_cast<float>(std::exp(d2 * inv));
      img(x, y) = std::max(img(x, y), v);
    }
  }
}

void validate(const SynthSpec& spec) {
  const auto bad = [](const std::string& what) { return Error(ErrorKind::InvalidArgument, "synthetic spec: " + what); };
  if (spec.n_subjects < 1) throw bad("need at least one subject");
  if (spec.view_azimuths.empty()) throw bad("need at least one view");
  if (spec.paths.empty()) throw bad("need at least one path");
  if (spec.frames < 2) throw bad("need at least two frames");
  if (spec.width < 32 || spec.height < 32) throw bad("frames must be at least 32x32");
  if (!(spec.fps > 0.0) || spec.noise < 0.0) throw bad("fps must be positive and noise non-negative");
  for (const auto& p : spec.paths) {
    if (p.shape == PathShape::Curved && !(p.radius > 0.0)) throw bad("curved paths need a positive radius");
    if (p.turn != 1 && p.turn != -1) throw bad("turn must be +1 or -1");
  }
  if (!spec.gaits.empty() && static_cast<int>(spec.gaits.size()) != spec.n_subjects) {
    throw bad("gait list does not match the subject count");
  }
}

}  // namespace

std::vector<PathSpec> SynthSpec::default_paths() {
  return {
      {PathShape::Straight, 0.0, 70.0, 1},   {PathShape::Straight, 15.0, 70.0, 1},
      {PathShape::Straight, -15.0, 70.0, 1}, {PathShape::Curved, 0.0, 70.0, 1},
      {PathShape::Curved, 0.0, 70.0, -1},    {PathShape::Curved, 20.0, 70.0, 1},
  };
}

std::vector<GaitParams> subject_gaits(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::vector<GaitParams> gaits = spec.gaits;
  if (gaits.empty()) {
    const int n = spec.n_subjects;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.2, 0.8);
    // Each parameter takes one value per stratum of its range, strata permuted per parameter.
    const auto stratified = [&](double lo, double hi) {
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<double> v;
      for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * (order[i] + jitter(rng)) / n);
      return v;
    };
    const auto stride = stratified(0.8, 1.6);
    const auto amplitude = stratified(7.0, 12.0);
    const auto sway = stratified(1.0, 3.0);
    const auto speed = stratified(0.55, 0.85);
    const auto height = stratified(44.0, 56.0);
    const auto arms = stratified(0.4, 0.9);
    const auto knee = stratified(0.5, 1.0);
    for (int i = 0; i < n; ++i) {
      gaits.push_back({stride[i], amplitude[i], sway[i], speed[i], height[i], arms[i], knee[i]});
    }
  }
  std::set<std::tuple<double, double, double, double>> seen;
  for (const auto& g : gaits) {
    if (!(g.stride_hz > 0 && g.limb_amplitude > 0 && g.torso_sway > 0 && g.speed > 0 && g.body_height > 0 &&
          g.arm_ratio > 0 && g.knee_lift > 0)) {
      throw Error(ErrorKind::InvalidArgument, "synthetic spec: gait parameters must be positive");
    }
    if (!seen.emplace(g.stride_hz, g.limb_amplitude, g.torso_sway, g.speed).second) {
      throw Error(ErrorKind::InvalidArgument, "synthetic spec: subjects must have distinct gait parameters");
    }
  }
  return gaits;
}

std::array<Point2, kJointCount> project_joints(const SynthSpec& spec, const GaitParams& gait, const PathSpec& path,
                                               double azimuth_deg, int frame) {
  const Projector project = make_projector(spec, gait, path, azimuth_deg, frame);
  const auto local = body_joints(gait, frame / spec.fps);
  std::array<Point2, kJointCount> out{};
  for (int i = 0; i < kJointCount; ++i) out[i] = project(local[i]);
  return out;
}

SynthVideo render_video(const SynthSpec& spec, const GaitParams& gait, const PathSpec& path, double azimuth_deg,
                        std::uint64_t seed) {
  validate(spec);
  SynthVideo video;
  video.sequence.width = spec.width;
  video.sequence.height = spec.height;
  video.track.track_id = 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, static_cast<float>(spec.noise));

  for (int f = 0; f < spec.frames; ++f) {
    const Projector project = make_projector(spec, gait, path, azimuth_deg, f);
    const auto joints = project_joints(spec, gait, path, azimuth_deg, f);
    FloatImage canvas(spec.width, spec.height, kBackground);
    const Point2 root = joints[static_cast<int>(Joint::Pelvis)];
    double half_width = 0.0, top = root.y, bottom = root.y;
    for (const auto& s : kStrokes) {
      const Point2 p = joints[static_cast<int>(s.from)], q = joints[static_cast<int>(s.to)];
      const double sigma = s.sigma * gait.body_height * project.scale;
      const int steps = std::max(1, static_cast<int>(std::ceil(std::hypot(q.x - p.x, q.y - p.y) / 0.5)));
      for (int k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        const Point2 c{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        splat(canvas, c, sigma, s.intensity);
        half_width = std::max(half_width, std::abs(c.x - root.x) + 2.0 * sigma);
        top = std::min(top, c.y - 2.0 * sigma);
        bottom = std::max(bottom, c.y + 2.0 * sigma);
      }
    }
    GrayImage frame(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        float v = canvas(x, y);
        if (spec.noise > 0.0) v += noise(rng);
        frame(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    video.sequence.frames.push_back(std::move(frame));

    // Box symmetric about the projected pelvis so its center follows the path exactly.
    Box box{static_cast<int>(std::lround(root.x - half_width)), static_cast<int>(std::lround(top)),
            static_cast<int>(std::lround(root.x + half_width)), static_cast<int>(std::lround(bottom))};
    box.x_min = std::clamp(box.x_min, 0, spec.width - 1);
    box.x_max = std::clamp(box.x_max, 0, spec.width - 1);
    box.y_min = std::clamp(box.y_min, 0, spec.height - 1);
    box.y_max = std::clamp(box.y_max, 0, spec.height - 1);
    if (box.valid()) video.track.boxes.push_back({f, box, std::nullopt});
  }
  return video;
}

DatasetManifest synth_generate(const SynthSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir,
                               int jobs) {
  const auto gaits = subject_gaits(spec, seed);
  DatasetManifest manifest;
  for (int s = 0; s < spec.n_subjects; ++s) {
    for (std::size_t p = 0; p < spec.paths.size(); ++p) {
      for (std::size_t v = 0; v < spec.view_azimuths.size(); ++v) {
        ManifestEntry e;
        e.subject_id = s + 1;
        e.trajectory_id = static_cast<int>(p) + 1;
        e.view_id = static_cast<int>(v) + 1;
        const std::string name = "s" + std::to_string(e.subject_id) + "_t" + std::to_string(e.trajectory_id) + "_v" +
                                 std::to_string(e.view_id);
        e.frames_dir = out_dir / name;
        e.track_file = out_dir / (name + ".tracks");
        manifest.entries.push_back(e);
      }
    }
  }
  parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    const std::uint64_t video_seed = seed ^ (0x9E3779B97F4A7C15ULL * (i + 1));
    SynthVideo video = render_video(spec, gaits[e.subject_id - 1], spec.paths[e.trajectory_id - 1],
                                    spec.view_azimuths[e.view_id - 1], video_seed);
    video.sequence.view_id = e.view_id;
    video.sequence.subject_id = e.subject_id;
    video.sequence.trajectory_id = e.trajectory_id;
    std::filesystem::remove_all(e.frames_dir);
    write_sequence(e.frames_dir, video.sequence);
    write_tracks(e.track_file, {video.track});
  });
  write_manifest(out_dir / "manifest.txt", manifest);
  return manifest;
}

}  // namespace pfm
