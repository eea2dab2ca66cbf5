#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pfm/geometry.hpp"
#include "pfm/image.hpp"

namespace pfm {

struct FrameSequence {
  std::vector<GrayImage> frames;
  int width = 0;
  int height = 0;
  int view_id = 0;
  std::optional<int> subject_id;
  std::optional<int> trajectory_id;
};

struct ManifestEntry {
  int subject_id = 0;
  int trajectory_id = 0;
  int view_id = 0;
  std::filesystem::path frames_dir;
  std::filesystem::path track_file;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

/// Fixed luma combination 0.299R + 0.587G + 0.114B, rounded to nearest.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// Reads binary PGM (P5) or PPM (P6, converted with `luma`). 8-bit only.
GrayImage read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Loads every .pgm/.ppm/.pnm file of `dir` in lexicographic order.
FrameSequence load_sequence(const std::filesystem::path& dir);
FrameSequence load_sequence(const ManifestEntry& entry);
void write_sequence(const std::filesystem::path& dir, const FrameSequence& sequence);

/// Track text format: `track_id frame x_min y_min x_max y_max [score]` per line.
/// Boxes are clamped to the frame when `frame_width`/`frame_height` are given.
std::vector<PersonTrack> load_tracks(const std::filesystem::path& path, int frame_width = 0,
                                     int frame_height = 0);
std::vector<PersonTrack> parse_tracks(const std::string& text, int frame_width = 0,
                                      int frame_height = 0);
std::string format_tracks(const std::vector<PersonTrack>& tracks);
void write_tracks(const std::filesystem::path& path, const std::vector<PersonTrack>& tracks);

/// Manifest format: `subject_id trajectory_id view_id frames_dir track_file` per line.
/// Relative paths resolve against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace pfm
