#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace pfm {

/// Row-major single channel raster.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  // Replicate-edge access.
  const T& clamped(int x, int y) const {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> row(int y) { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<T> pixels() noexcept { return data_; }

  bool same_size(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

}  // namespace pfm
