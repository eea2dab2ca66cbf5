#include "pfm/videoio.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "pfm/cache.hpp"
#include "pfm/error.hpp"

namespace fs = std::filesystem;

namespace pfm {

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  // Integer form of round(0.299R + 0.587G + 0.114B); max is 255000 + 500.
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) token += bytes[pos++];
  return token;
}

int header_int(const std::string& bytes, std::size_t& pos, const fs::path& path) {
  const std::string token = header_token(bytes, pos);
  try {
    std::size_t used = 0;
    const int value = std::stoi(token, &used);
    if (used != token.size() || value <= 0) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Format, "bad PNM header field '" + token + "' in " + path.string());
  }
}

bool is_frame_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

GrayImage read_pnm(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  const std::string magic = header_token(bytes, pos);
  if (magic != "P5" && magic != "P6") {
    throw Error(ErrorKind::Format, path.string() + ": only binary P5/P6 images are supported");
  }
  const int width = header_int(bytes, pos, path);
  const int height = header_int(bytes, pos, path);
  const int maxval = header_int(bytes, pos, path);
  if (maxval > 255) throw Error(ErrorKind::Format, path.string() + ": 16-bit PNM not supported");
  ++pos;  // single whitespace after maxval
  const bool color = magic == "P6";
  const std::size_t channels = color ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (pos + n * channels > bytes.size()) throw Error(ErrorKind::Format, path.string() + ": truncated pixel data");

  GrayImage image(width, height);
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + pos);
  auto scale = [maxval](std::uint8_t v) {
    return maxval == 255 ? v : static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (color) {
      image.data()[i] = luma(scale(src[3 * i]), scale(src[3 * i + 1]), scale(src[3 * i + 2]));
    } else {
      image.data()[i] = scale(src[i]);
    }
  }
  return image;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.data()), image.size());
  write_file_atomic(path, out);
}

FrameSequence load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Load, "frame directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_frame_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 2) {
    throw Error(ErrorKind::InsufficientData,
                dir.string() + " holds " + std::to_string(files.size()) + " frames, need at least 2");
  }
  FrameSequence seq;
  seq.frames.reserve(files.size());
  for (const auto& file : files) {
    GrayImage frame = read_pnm(file);
    if (seq.frames.empty()) {
      seq.width = frame.width();
      seq.height = frame.height();
    } else if (frame.width() != seq.width || frame.height() != seq.height) {
      throw Error(ErrorKind::Format, "mixed resolutions in " + dir.string() + ": " + file.filename().string() +
                                         " is " + std::to_string(frame.width()) + "x" +
                                         std::to_string(frame.height()));
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

FrameSequence load_sequence(const ManifestEntry& entry) {
  FrameSequence seq = load_sequence(entry.frames_dir);
  seq.view_id = entry.view_id;
  seq.subject_id = entry.subject_id;
  seq.trajectory_id = entry.trajectory_id;
  return seq;
}

void write_sequence(const fs::path& dir, const FrameSequence& sequence) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < sequence.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
    write_pgm(dir / name, sequence.frames[i]);
  }
}

std::vector<PersonTrack> parse_tracks(const std::string& text, int frame_width, int frame_height) {
  std::map<int, PersonTrack> by_id;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    const auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::Parse, "track file line " + std::to_string(line_no) + ": " + why);
    };
    if (tokens.size() != 6 && tokens.size() != 7) fail("expected 6 or 7 fields, got " + std::to_string(tokens.size()));
    int v[6];
    for (int i = 0; i < 6; ++i) {
      std::size_t used = 0;
      try {
        v[i] = std::stoi(tokens[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tokens[i].size()) fail("field " + std::to_string(i + 1) + " '" + tokens[i] + "' is not an integer");
    }
    FrameBox fb{v[1], Box{v[2], v[3], v[4], v[5]}, std::nullopt};
    if (tokens.size() == 7) {
      std::size_t used = 0;
      try {
        fb.score = std::stod(tokens[6], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tokens[6].size()) fail("score '" + tokens[6] + "' is not a number");
    }
    if (fb.frame < 0) fail("negative frame index");
    if (!fb.box.valid()) fail("box corners must satisfy x_min < x_max and y_min < y_max");
    if (frame_width > 0 && frame_height > 0) {
      const Box clamped{std::clamp(fb.box.x_min, 0, frame_width - 1), std::clamp(fb.box.y_min, 0, frame_height - 1),
                        std::clamp(fb.box.x_max, 0, frame_width - 1), std::clamp(fb.box.y_max, 0, frame_height - 1)};
      if (clamped != fb.box) {
        warn("track file line " + std::to_string(line_no) + ": box clamped to frame bounds");
        if (!clamped.valid()) {
          warn("track file line " + std::to_string(line_no) + ": box lies outside the frame, dropped");
          continue;
        }
        fb.box = clamped;
      }
    }
    auto& track = by_id[v[0]];
    track.track_id = v[0];
    track.boxes.push_back(fb);
  }
  std::vector<PersonTrack> tracks;
  for (auto& [id, track] : by_id) {
    std::stable_sort(track.boxes.begin(), track.boxes.end(),
                     [](const FrameBox& a, const FrameBox& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < track.boxes.size(); ++i) {
      if (track.boxes[i].frame == track.boxes[i - 1].frame) {
        throw Error(ErrorKind::Parse, "track " + std::to_string(id) + " has two boxes at frame " +
                                          std::to_string(track.boxes[i].frame));
      }
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

std::vector<PersonTrack> load_tracks(const fs::path& path, int frame_width, int frame_height) {
  if (!fs::exists(path)) throw Error(ErrorKind::Load, "track file not found: " + path.string());
  return parse_tracks(read_file(path), frame_width, frame_height);
}

std::string format_tracks(const std::vector<PersonTrack>& tracks) {
  std::string out;
  char buf[160];
  for (const auto& track : tracks) {
    for (const auto& fb : track.boxes) {
      int n = std::snprintf(buf, sizeof(buf), "%d %d %d %d %d %d", track.track_id, fb.frame, fb.box.x_min,
                            fb.box.y_min, fb.box.x_max, fb.box.y_max);
      out.append(buf, static_cast<std::size_t>(n));
      if (fb.score) {
        n = std::snprintf(buf, sizeof(buf), " %.17g", *fb.score);
        out.append(buf, static_cast<std::size_t>(n));
      }
      out += '\n';
    }
  }
  return out;
}

void write_tracks(const fs::path& path, const std::vector<PersonTrack>& tracks) {
  write_file_atomic(path, format_tracks(tracks));
}

DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Load, "manifest not found: " + path.string());
  const fs::path base = path.parent_path();
  std::istringstream in(read_file(path));
  DatasetManifest manifest;
  std::set<std::tuple<int, int, int>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    ManifestEntry e;
    std::string frames_dir, track_file, extra;
    if (!(fields >> e.subject_id)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw Error(ErrorKind::Parse, "manifest line " + std::to_string(line_no) + ": bad subject id");
    }
    if (!(fields >> e.trajectory_id >> e.view_id >> frames_dir >> track_file) || (fields >> extra)) {
      throw Error(ErrorKind::Parse, "manifest line " + std::to_string(line_no) + ": expected 5 fields");
    }
    e.frames_dir = fs::path(frames_dir).is_absolute() ? fs::path(frames_dir) : base / frames_dir;
    e.track_file = fs::path(track_file).is_absolute() ? fs::path(track_file) : base / track_file;
    if (!seen.insert({e.subject_id, e.trajectory_id, e.view_id}).second) {
      throw Error(ErrorKind::Format, "manifest line " + std::to_string(line_no) + ": duplicate (subject, trajectory, view)");
    }
    if (!fs::is_directory(e.frames_dir)) throw Error(ErrorKind::Load, "manifest references missing " + e.frames_dir.string());
    if (!fs::exists(e.track_file)) throw Error(ErrorKind::Load, "manifest references missing " + e.track_file.string());
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path base = path.parent_path();
  const auto rel = [&base](const fs::path& p) {
    if (base.empty()) return p.generic_string();
    const fs::path r = p.lexically_relative(base);
    return r.empty() ? p.generic_string() : r.generic_string();
  };
  std::string out;
  for (const auto& e : manifest.entries) {
    out += std::to_string(e.subject_id) + " " + std::to_string(e.trajectory_id) + " " + std::to_string(e.view_id) +
           " " + rel(e.frames_dir) + " " + rel(e.track_file) + "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace pfm
