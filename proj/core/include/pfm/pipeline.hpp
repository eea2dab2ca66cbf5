#pragma once

#include <filesystem>
#include <string>

#include "pfm/config.hpp"
#include "pfm/optflow.hpp"
#include "pfm/pyramid.hpp"
#include "pfm/tracker.hpp"
#include "pfm/videoio.hpp"

namespace pfm {

struct ExtractParams {
  FlowParams flow;
  TrackerParams tracker;
};

/// Reads `flow.*` and `tracker.*` keys.
ExtractParams extract_params(const Config& config);

/// Stable fingerprint of the parameters, used to key cached descriptors.
std::string fingerprint(const ExtractParams& params);

struct VideoKey {
  int subject = 0;
  int trajectory = 0;
  int view = 0;
  bool mirrored = false;

  std::string name() const;
  friend bool operator==(const VideoKey&, const VideoKey&) = default;
};

/// Local descriptors of one video, restricted to its person track.
struct VideoData {
  VideoKey key;
  LocalFeatures features;
  PersonTrack track;
};

/// The track describing the labelled subject: the one with the most boxes, lowest id on ties.
const PersonTrack& subject_track(std::span<const PersonTrack> tracks);

/// Tracks, filters and describes one sequence.
VideoData extract_video(const FrameSequence& sequence, std::span<const PersonTrack> tracks, const VideoKey& key,
                        const ExtractParams& params);

/// Loads (and mirrors if requested) a manifest entry, then extracts or reuses the cached
/// result under `cache_dir/desc`. Cached and fresh results are identical.
VideoData load_or_extract(const ManifestEntry& entry, bool mirrored, const ExtractParams& params,
                          const std::filesystem::path& cache_dir);

void write_video_cache(const std::filesystem::path& stem, const VideoData& video);
/// Returns false when either file is missing.
bool read_video_cache(const std::filesystem::path& stem, VideoData& video);

}  // namespace pfm
