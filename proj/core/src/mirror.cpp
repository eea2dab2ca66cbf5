#include <algorithm>

#include "pfm/classify.hpp"

namespace pfm {

Box mirror_box(const Box& box, int width) {
  return {width - 1 - box.x_max, box.y_min, width - 1 - box.x_min, box.y_max};
}

GrayImage mirror_image(const GrayImage& image) {
  GrayImage out = image;
  for (int y = 0; y < out.height(); ++y) {
    auto row = out.row(y);
    std::reverse(row.begin(), row.end());
  }
  return out;
}

std::pair<FrameSequence, std::vector<PersonTrack>> mirror_sequence(const FrameSequence& sequence,
                                                                   std::span<const PersonTrack> tracks) {
  FrameSequence out = sequence;
  for (auto& frame : out.frames) frame = mirror_image(frame);
  std::vector<PersonTrack> mirrored(tracks.begin(), tracks.end());
  for (auto& track : mirrored) {
    for (auto& fb : track.boxes) fb.box = mirror_box(fb.box, sequence.width);
  }
  return {std::move(out), std::move(mirrored)};
}

}  // namespace pfm
