#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hexspec/errors.hpp"

namespace hexspec {

/// Single-channel float image, row-major, pixel centers at integer coordinates.
class Image {
 public:
  Image() = default;
  Image(int width, int height, float fill = 0.0f)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(int x, int y) { return data_[index(x, y)]; }
  float operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<float> pixels() { return data_; }
  std::span<const float> pixels() const { return data_; }

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1;
  }

  float clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  /// Bilinear sample; coordinates outside [0, w-1] x [0, h-1] are clamped to the edge.
  float bilinear(double x, double y) const {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const float ax = static_cast<float>(x - fx);
    const float ay = static_cast<float>(y - fy);
    const float top = clamped(x0, y0) * (1.0f - ax) + clamped(x0 + 1, y0) * ax;
    const float bottom = clamped(x0, y0 + 1) * (1.0f - ax) + clamped(x0 + 1, y0 + 1) * ax;
    return top * (1.0f - ay) + bottom * ay;
  }

  bool same_size(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static long checked_area(int width, int height) {
    if (width <= 0 || height <= 0) throw DimensionError("image dimensions must be positive");
    return static_cast<long>(width) * height;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Binary per-pixel mask (1 = set). Stored as bytes for cheap indexing.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width <= 0 || height <= 0) throw DimensionError("mask dimensions must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t& operator()(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t operator()(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<std::uint8_t> cells() { return data_; }
  std::span<const std::uint8_t> cells() const { return data_; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : data_) n += v != 0;
    return n;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace hexspec
