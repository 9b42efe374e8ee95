#pragma once

#include <array>
#include <span>
#include <vector>

#include "hexspec/image.hpp"

namespace hexspec {

/// Narrow-band sampling of the visible range: band c is centered at start + c * step.
struct BandPlan {
  int count = 37;
  double start_nm = 400.0;
  double step_nm = 10.0;
  double bandwidth_nm = 10.0;

  double center(int band) const { return start_nm + band * step_nm; }
  void validate() const;

  friend bool operator==(const BandPlan&, const BandPlan&) = default;
};

/// Hyperspectral cube: `bands` images of width x height. Public operations
/// produce samples in [0, 1]; solver intermediates may leave that range.
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(int width, int height, int bands, float fill = 0.0f);
  explicit HyperCube(std::vector<Image> bands);

  int width() const { return width_; }
  int height() const { return height_; }
  int bands() const { return static_cast<int>(bands_.size()); }

  Image& band(int c) { return bands_.at(static_cast<std::size_t>(c)); }
  const Image& band(int c) const { return bands_.at(static_cast<std::size_t>(c)); }
  std::span<Image> all_bands() { return bands_; }
  std::span<const Image> all_bands() const { return bands_; }

  float& at(int c, int x, int y) { return bands_[static_cast<std::size_t>(c)](x, y); }
  float at(int c, int x, int y) const { return bands_[static_cast<std::size_t>(c)](x, y); }

  bool same_shape(const HyperCube& other) const {
    return width_ == other.width_ && height_ == other.height_ && bands() == other.bands();
  }
  /// True when every sample is finite and inside [0, 1].
  bool normalized() const;
  void clip_to_unit();
  /// Cube holding bands [first, first + count).
  HyperCube slice(int first, int count) const;

  friend bool operator==(const HyperCube&, const HyperCube&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Image> bands_;
};

/// Relative spectral power of a black-body source, peak-normalized over the plan.
struct Illuminant {
  double temperature_k = 0.0;
  std::vector<double> power;
};

/// Planck radiance B(lambda, T) in W sr^-1 m^-3, lambda in nm.
double planck_radiance(double wavelength_nm, double temperature_k);

Illuminant planck_illuminant(double temperature_k, const BandPlan& plan);

/// CIE 1931 2-degree colour matching functions, linearly interpolated from the
/// 5 nm table (360..830 nm). Returns {xbar, ybar, zbar}.
std::array<double, 3> cie1931_cmf(double wavelength_nm);

struct RgbImage {
  Image r, g, b;
};

/// Linear sRGB preview of a cube, white-balanced so a flat unit spectrum maps
/// to (1, 1, 1), clipped to [0, 1].
RgbImage render_rgb_preview(const HyperCube& cube, const BandPlan& plan);

/// sRGB transfer curve for display encoding.
double srgb_encode(double linear);

}  // namespace hexspec
