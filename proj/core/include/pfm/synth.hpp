#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pfm/geometry.hpp"
#include "pfm/image.hpp"
#include "pfm/videoio.hpp"

namespace pfm {

/// Walking style of one synthetic subject. Lengths are pixels at unit depth scale.
struct GaitParams {
  double stride_hz = 1.0;
  double limb_amplitude = 9.0;  // horizontal foot excursion
  double torso_sway = 2.0;      // lateral pelvis sway
  double speed = 0.7;           // ground speed, px per frame
  double body_height = 50.0;
  double arm_ratio = 0.6;       // arm swing relative to leg swing
  double knee_lift = 0.7;       // peak knee flexion, radians

  friend bool operator==(const GaitParams&, const GaitParams&) = default;
};

enum class PathShape { Straight, Curved };

struct PathSpec {
  PathShape shape = PathShape::Straight;
  double heading_deg = 0.0;  // walking direction at the middle frame
  double radius = 70.0;      // curved paths only
  int turn = 1;              // +1 turns left, -1 right
};

struct SynthSpec {
  int n_subjects = 5;
  std::vector<double> view_azimuths{0.0, 45.0, 135.0, 180.0};
  int frames = 150;
  int width = 160;
  int height = 120;
  double fps = 25.0;
  std::vector<PathSpec> paths = default_paths();
  std::vector<GaitParams> gaits;  // per subject; sampled from the seed when empty
  double noise = 1.0;             // standard deviation of additive pixel noise

  static std::vector<PathSpec> default_paths();
};

/// Validates `spec` and returns one gait per subject. Sampled gaits are stratified so
/// every parameter differs between subjects.
std::vector<GaitParams> subject_gaits(const SynthSpec& spec, std::uint64_t seed);

enum class Joint { Pelvis, Neck, Head, LeftKnee, LeftAnkle, RightKnee, RightAnkle, LeftHand, RightHand, Count };
inline constexpr int kJointCount = static_cast<int>(Joint::Count);

/// Image-plane joint positions at `frame` (time frame / fps).
std::array<Point2, kJointCount> project_joints(const SynthSpec& spec, const GaitParams& gait, const PathSpec& path,
                                               double azimuth_deg, int frame);

struct SynthVideo {
  FrameSequence sequence;
  PersonTrack track;
};

/// Renders one video. Noise is drawn from `seed`; the rest is deterministic.
SynthVideo render_video(const SynthSpec& spec, const GaitParams& gait, const PathSpec& path, double azimuth_deg,
                        std::uint64_t seed);

/// Renders every (subject, trajectory, view) under `out_dir` and writes `manifest.txt`.
/// Subjects, trajectories and views are numbered from 1.
DatasetManifest synth_generate(const SynthSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir,
                               int jobs = 1);

}  // namespace pfm
