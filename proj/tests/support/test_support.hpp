#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pfm/image.hpp"

namespace pfm::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "pfm") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Band-limited texture given as a sum of plane waves, so shifted copies are exact.
class Texture {
 public:
  explicit Texture(std::uint64_t seed, int waves = 24, double min_period = 7.0, double max_period = 28.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), period(min_period, max_period), amp(6.0, 14.0);
    for (int i = 0; i < waves; ++i) {
      const double a = angle(rng), w = 2.0 * M_PI / period(rng);
      waves_.push_back({w * std::cos(a), w * std::sin(a), angle(rng), amp(rng)});
    }
  }

  double operator()(double x, double y) const {
    double v = 128.0;
    for (const auto& w : waves_) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    return v;
  }

  /// Image whose pixel (x, y) samples the texture at (x - dx, y - dy): content moved by (dx, dy).
  FloatImage render(int width, int height, double dx = 0.0, double dy = 0.0) const {
    FloatImage img(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) img(x, y) = static_cast<float>((*this)(x - dx, y - dy));
    return img;
  }

 private:
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves_;
};

inline GrayImage quantize(const FloatImage& f) {
  GrayImage g(f.width(), f.height());
  for (std::size_t i = 0; i < f.size(); ++i) {
    g.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(f.data()[i]), 0L, 255L));
  }
  return g;
}

}  // namespace pfm::test
