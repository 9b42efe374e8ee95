#include "hexspec/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace hexspec {

void BandPlan::validate() const {
  if (count < 1) throw DomainError("band plan needs at least one band");
  if (!(step_nm > 0.0)) throw DomainError("band step must be positive");
  if (!(bandwidth_nm > 0.0)) throw DomainError("bandwidth must be positive");
}

HyperCube::HyperCube(int width, int height, int bands, float fill) : width_(width), height_(height) {
  if (bands < 1) throw DimensionError("cube needs at least one band");
  bands_.assign(static_cast<std::size_t>(bands), Image(width, height, fill));
}

HyperCube::HyperCube(std::vector<Image> bands) : bands_(std::move(bands)) {
  if (bands_.empty()) throw DimensionError("cube needs at least one band");
  width_ = bands_.front().width();
  height_ = bands_.front().height();
  for (const auto& b : bands_)
    if (b.width() != width_ || b.height() != height_)
      throw DimensionError("all cube bands must share one size");
  if (width_ <= 0 || height_ <= 0) throw DimensionError("cube dimensions must be positive");
}

bool HyperCube::normalized() const {
  for (const auto& b : bands_)
    for (float v : b.pixels())
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f) return false;
  return true;
}

void HyperCube::clip_to_unit() {
  for (auto& b : bands_)
    for (float& v : b.pixels()) v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
}

HyperCube HyperCube::slice(int first, int count) const {
  if (first < 0 || count < 1 || first + count > bands())
    throw DimensionError(fmt::format("band slice [{}, {}) outside cube with {} bands", first,
                                     first + count, bands()));
  return HyperCube(std::vector<Image>(bands_.begin() + first, bands_.begin() + first + count));
}

double planck_radiance(double wavelength_nm, double temperature_k) {
  constexpr double h = 6.62607015e-34;
  constexpr double c = 2.99792458e8;
  constexpr double kb = 1.380649e-23;
  const double lambda = wavelength_nm * 1e-9;
  return (2.0 * h * c * c / std::pow(lambda, 5)) / std::expm1(h * c / (lambda * kb * temperature_k));
}

Illuminant planck_illuminant(double temperature_k, const BandPlan& plan) {
  if (!(temperature_k > 0.0) || !std::isfinite(temperature_k))
    throw DomainError(fmt::format("illuminant temperature must be positive, got {}", temperature_k));
  plan.validate();
  Illuminant out{temperature_k, {}};
  out.power.resize(static_cast<std::size_t>(plan.count));
  for (int c = 0; c < plan.count; ++c)
    out.power[static_cast<std::size_t>(c)] = planck_radiance(plan.center(c), temperature_k);
  const double peak = *std::max_element(out.power.begin(), out.power.end());
  for (double& p : out.power) p /= peak;
  return out;
}

namespace {

// XYZ -> linear sRGB (IEC 61966-2-1).
constexpr double kXyzToRgb[3][3] = {
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
};

}  // namespace

RgbImage render_rgb_preview(const HyperCube& cube, const BandPlan& plan) {
  plan.validate();
  if (cube.bands() != plan.count)
    throw DimensionError(fmt::format("cube has {} bands but the plan has {}", cube.bands(), plan.count));
  if (plan.center(0) < 360.0 || plan.center(plan.count - 1) > 830.0)
    throw DomainError("band centers must lie within 360..830 nm for the CIE preview");

  // Per-band weight from spectrum to linear RGB, rectangle rule with width = step.
  std::vector<std::array<double, 3>> weights(static_cast<std::size_t>(plan.count));
  std::array<double, 3> flat{0.0, 0.0, 0.0};
  for (int c = 0; c < plan.count; ++c) {
    const auto xyz = cie1931_cmf(plan.center(c));
    auto& w = weights[static_cast<std::size_t>(c)];
    for (int k = 0; k < 3; ++k) {
      w[k] = plan.step_nm *
             (kXyzToRgb[k][0] * xyz[0] + kXyzToRgb[k][1] * xyz[1] + kXyzToRgb[k][2] * xyz[2]);
      flat[k] += w[k];
    }
  }
  for (auto& w : weights)
    for (int k = 0; k < 3; ++k) w[k] /= flat[k];

  const int width = cube.width();
  const int height = cube.height();
  RgbImage out{Image(width, height), Image(width, height), Image(width, height)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double rgb[3] = {0.0, 0.0, 0.0};
      for (int c = 0; c < plan.count; ++c) {
        const double v = cube.at(c, x, y);
        const auto& w = weights[static_cast<std::size_t>(c)];
        for (int k = 0; k < 3; ++k) rgb[k] += v * w[k];
      }
      out.r(x, y) = static_cast<float>(std::clamp(rgb[0], 0.0, 1.0));
      out.g(x, y) = static_cast<float>(std::clamp(rgb[1], 0.0, 1.0));
      out.b(x, y) = static_cast<float>(std::clamp(rgb[2], 0.0, 1.0));
    }
  }
  return out;
}

double srgb_encode(double linear) {
  linear = std::clamp(linear, 0.0, 1.0);
  return linear <= 0.0031308 ? 12.92 * linear : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

}  // namespace hexspec
