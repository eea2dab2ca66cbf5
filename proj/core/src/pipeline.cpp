#include "pfm/pipeline.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pfm/cache.hpp"
#include "pfm/classify.hpp"
#include "pfm/descriptor.hpp"
#include "pfm/error.hpp"

namespace pfm {

ExtractParams extract_params(const Config& c) {
  ExtractParams p;
  p.flow.levels = c.get_int("flow.levels", p.flow.levels);
  p.flow.pyr_scale = c.get_double("flow.pyr_scale", p.flow.pyr_scale);
  p.flow.window = c.get_int("flow.window", p.flow.window);
  p.flow.iterations = c.get_int("flow.iterations", p.flow.iterations);
  p.flow.poly_n = c.get_int("flow.poly_n", p.flow.poly_n);
  p.flow.poly_sigma = c.get_double("flow.poly_sigma", p.flow.poly_sigma);
  p.flow.min_level_size = c.get_int("flow.min_level_size", p.flow.min_level_size);
  p.tracker.sample_step = c.get_int("tracker.sample_step", p.tracker.sample_step);
  p.tracker.n_scales = c.get_int("tracker.n_scales", p.tracker.n_scales);
  p.tracker.scale_factor = c.get_double("tracker.scale_factor", p.tracker.scale_factor);
  p.tracker.median_kernel = c.get_int("tracker.median_kernel", p.tracker.median_kernel);
  p.tracker.patch_size = c.get_int("tracker.patch_size", p.tracker.patch_size);
  p.tracker.prune.min_std = c.get_double("tracker.min_std", p.tracker.prune.min_std);
  p.tracker.prune.max_step = c.get_double("tracker.max_step", p.tracker.prune.max_step);
  p.tracker.prune.dominant_fraction = c.get_double("tracker.dominant_fraction", p.tracker.prune.dominant_fraction);
  if (c.has("tracker.traj_length") && c.get_int("tracker.traj_length", 15) != kDescriptorLength) {
    throw Error(ErrorKind::InvalidArgument, "tracker.traj_length must be " + std::to_string(kDescriptorLength) +
                                                " for the 318-d descriptor layout");
  }
  return p;
}

std::string fingerprint(const ExtractParams& p) {
  char text[512];
  std::snprintf(text, sizeof text, "%d %.17g %d %d %d %.17g %d|%d %d %.17g %d %d %d %.17g %.17g %.17g", p.flow.levels,
                p.flow.pyr_scale, p.flow.window, p.flow.iterations, p.flow.poly_n, p.flow.poly_sigma,
                p.flow.min_level_size, p.tracker.sample_step, p.tracker.n_scales, p.tracker.scale_factor,
                p.tracker.traj_length, p.tracker.median_kernel, p.tracker.patch_size, p.tracker.prune.min_std,
                p.tracker.prune.max_step, p.tracker.prune.dominant_fraction);
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a
  for (const char* c = text; *c; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 1099511628211ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
  return hex;
}

std::string VideoKey::name() const {
  return "s" + std::to_string(subject) + "_t" + std::to_string(trajectory) + "_v" + std::to_string(view) +
         (mirrored ? "_m" : "");
}

const PersonTrack& subject_track(std::span<const PersonTrack> tracks) {
  if (tracks.empty()) throw Error(ErrorKind::InsufficientData, "video has no person track");
  const PersonTrack* best = &tracks.front();
  for (const auto& t : tracks) {
    if (t.boxes.size() > best->boxes.size() || (t.boxes.size() == best->boxes.size() && t.track_id < best->track_id)) {
      best = &t;
    }
  }
  return *best;
}

VideoData extract_video(const FrameSequence& sequence, std::span<const PersonTrack> tracks, const VideoKey& key,
                        const ExtractParams& params) {
  VideoData out;
  out.key = key;
  out.track = subject_track(tracks);
  const TrackingResult tracking = extract_trajectories(sequence, params.tracker, params.flow);
  const std::vector<TrackAssignment> assignments = filter_by_tracks(tracking.trajectories, tracks);
  std::vector<TrajectoryDescriptor> descriptors;
  for (const auto& a : assignments) {
    if (a.track_id != out.track.track_id) continue;
    for (const std::size_t i : a.trajectories) descriptors.push_back(describe_trajectory(tracking.trajectories[i]));
  }
  out.features = to_local_features(descriptors);
  return out;
}

void write_video_cache(const std::filesystem::path& stem, const VideoData& video) {
  const LocalFeatures& f = video.features;
  MatrixRowF values = f.values.cast<float>();
  std::ostringstream meta;
  meta << "pfm-meta 1\n";
  meta << "track " << video.track.track_id << " " << video.track.boxes.size() << "\n";
  char line[160];
  for (const auto& fb : video.track.boxes) {
    std::snprintf(line, sizeof line, "%d %d %d %d %d\n", fb.frame, fb.box.x_min, fb.box.y_min, fb.box.x_max,
                  fb.box.y_max);
    meta << line;
  }
  meta << "rows " << f.size() << "\n";
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g %.17g %d\n", f.positions[i].x, f.positions[i].y, f.middle_frames[i]);
    meta << line;
  }
  // Matrix last: its presence marks a complete entry.
  write_file_atomic(stem.string() + ".meta", meta.str());
  write_matrix(stem.string() + ".bin", values);
}

bool read_video_cache(const std::filesystem::path& stem, VideoData& video) {
  const std::filesystem::path bin = stem.string() + ".bin", meta_path = stem.string() + ".meta";
  if (!std::filesystem::exists(bin) || !std::filesystem::exists(meta_path)) return false;
  const MatrixRowF values = read_matrix(bin);
  std::istringstream meta(read_file(meta_path));
  const auto bad = [&] { return Error(ErrorKind::Format, "corrupt descriptor sidecar " + meta_path.string()); };
  std::string word;
  int version = 0;
  std::size_t n_boxes = 0;
  if (!(meta >> word >> version) || word != "pfm-meta" || version != 1) throw bad();
  if (!(meta >> word >> video.track.track_id >> n_boxes) || word != "track") throw bad();
  video.track.boxes.assign(n_boxes, {});
  for (auto& fb : video.track.boxes) {
    if (!(meta >> fb.frame >> fb.box.x_min >> fb.box.y_min >> fb.box.x_max >> fb.box.y_max)) throw bad();
  }
  Eigen::Index rows = 0;
  if (!(meta >> word >> rows) || word != "rows" || rows != values.rows()) throw bad();
  LocalFeatures& f = video.features;
  f.values = values.cast<double>();
  f.positions.assign(static_cast<std::size_t>(rows), {});
  f.middle_frames.assign(static_cast<std::size_t>(rows), 0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    std::string x, y;
    if (!(meta >> x >> y >> f.middle_frames[i])) throw bad();
    f.positions[i] = {std::stod(x), std::stod(y)};
  }
  return true;
}

VideoData load_or_extract(const ManifestEntry& entry, bool mirrored, const ExtractParams& params,
                          const std::filesystem::path& cache_dir) {
  const VideoKey key{entry.subject_id, entry.trajectory_id, entry.view_id, mirrored};
  const std::filesystem::path stem = cache_dir / "desc" / (key.name() + "_" + fingerprint(params));
  VideoData video;
  video.key = key;
  try {
    if (!cache_dir.empty() && read_video_cache(stem, video)) return video;
    FrameSequence sequence = load_sequence(entry);
    std::vector<PersonTrack> tracks = load_tracks(entry.track_file, sequence.width, sequence.height);
    if (mirrored) std::tie(sequence, tracks) = mirror_sequence(sequence, tracks);
    video = extract_video(sequence, tracks, key, params);
  } catch (const Error& e) {
    throw Error(ErrorKind::Stage, "extract " + key.name() + ": " + e.what());
  }
  // Round-trip through the cache representation so fresh and cached runs agree exactly.
  video.features.values = video.features.values.cast<float>().cast<double>();
  if (!cache_dir.empty()) write_video_cache(stem, video);
  return video;
}

}  // namespace pfm
