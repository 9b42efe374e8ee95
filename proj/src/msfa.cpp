#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hexspec/errors.hpp"
#include "hexspec/snapshot.hpp"

namespace hexspec {
namespace {

std::vector<double> tent_kernel(int period) {
  std::vector<double> k(static_cast<std::size_t>(2 * period - 1));
  for (int d = -(period - 1); d <= period - 1; ++d)
    k[static_cast<std::size_t>(d + period - 1)] = 1.0 - std::abs(d) / static_cast<double>(period);
  return k;
}

// Weights covering one full period, half weight on the two end taps for even
// periods, so each band contributes equally.
std::vector<double> period_average_kernel(int period) {
  std::vector<double> k;
  if (period % 2 == 1) {
    k.assign(static_cast<std::size_t>(period), 1.0);
  } else {
    k.assign(static_cast<std::size_t>(period + 1), 1.0);
    k.front() = k.back() = 0.5;
  }
  return k;
}

// Separable correlation of `values` weighted by `weights` (per pixel), returning
// sum(k * w * v) / sum(k * w). Pixels with zero total weight become 0.
Image normalized_convolution(const Image& values, const Image& weights, const std::vector<double>& kx,
                             const std::vector<double>& ky) {
  const int w = values.width();
  const int h = values.height();
  const int rx = static_cast<int>(kx.size()) / 2;
  const int ry = static_cast<int>(ky.size()) / 2;
  std::vector<double> num_h(values.size(), 0.0), den_h(values.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double n = 0.0, d = 0.0;
      for (int t = -rx; t <= rx; ++t) {
        const int xx = x + t;
        if (xx < 0 || xx >= w) continue;
        const double wt = weights(xx, y);
        if (wt == 0.0) continue;
        const double k = kx[static_cast<std::size_t>(t + rx)];
        n += k * wt * values(xx, y);
        d += k * wt;
      }
      num_h[static_cast<std::size_t>(y) * w + x] = n;
      den_h[static_cast<std::size_t>(y) * w + x] = d;
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double n = 0.0, d = 0.0;
      for (int t = -ry; t <= ry; ++t) {
        const int yy = y + t;
        if (yy < 0 || yy >= h) continue;
        const double k = ky[static_cast<std::size_t>(t + ry)];
        n += k * num_h[static_cast<std::size_t>(yy) * w + x];
        d += k * den_h[static_cast<std::size_t>(yy) * w + x];
      }
      out(x, y) = d > 0.0 ? static_cast<float>(n / d) : 0.0f;
    }
  }
  return out;
}

void check_mosaic(const Image& mosaic, const MosaicPattern& pattern) {
  if (mosaic.width() < pattern.tile_width() || mosaic.height() < pattern.tile_height())
    throw DimensionError(fmt::format("mosaic {}x{} is smaller than the {}x{} filter tile",
                                     mosaic.width(), mosaic.height(), pattern.tile_width(),
                                     pattern.tile_height()));
}

void check_reference(int reference_band, const MosaicPattern& pattern) {
  if (reference_band < 0 || reference_band >= pattern.band_count())
    throw DomainError(fmt::format("reference band {} outside the pattern", reference_band));
}

// Dense band `band` as reference + interpolated (sample - reference) residual.
Image spectral_difference(const Image& mosaic, const MosaicPattern& pattern, int band,
                          const Image& reference) {
  Image diff(mosaic.width(), mosaic.height());
  const auto [ox, oy] = pattern.cell_of(band);
  for (int y = oy; y < mosaic.height(); y += pattern.tile_height())
    for (int x = ox; x < mosaic.width(); x += pattern.tile_width())
      diff(x, y) = mosaic(x, y) - reference(x, y);
  Image out = interpolate_band(diff, pattern, band);
  auto o = out.pixels();
  const auto r = reference.pixels();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] += r[k];
  return out;
}

std::vector<Image> sd_unclipped(const Image& mosaic, const MosaicPattern& pattern, int reference_band) {
  const Image reference = interpolate_band(mosaic, pattern, reference_band);
  std::vector<Image> bands;
  bands.reserve(static_cast<std::size_t>(pattern.band_count()));
  for (int c = 0; c < pattern.band_count(); ++c)
    bands.push_back(c == reference_band ? reference : spectral_difference(mosaic, pattern, c, reference));
  return bands;
}

HyperCube clipped(std::vector<Image> bands) {
  HyperCube cube(std::move(bands));
  cube.clip_to_unit();
  return cube;
}

}  // namespace

MosaicPattern::MosaicPattern() : tile_width_(6), tile_height_(6), bands_(36) {
  std::iota(bands_.begin(), bands_.end(), 0);
}

MosaicPattern::MosaicPattern(int tile_width, int tile_height, std::vector<int> bands)
    : tile_width_(tile_width), tile_height_(tile_height), bands_(std::move(bands)) {
  if (tile_width < 1 || tile_height < 1) throw ConfigError("filter tile must be non-empty");
  if (bands_.size() != static_cast<std::size_t>(tile_width) * tile_height)
    throw ConfigError("filter tile band list does not match its size");
  std::vector<int> sorted = bands_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<int>(i))
      throw ConfigError("filter tile must assign each band exactly once");
}

std::pair<int, int> MosaicPattern::cell_of(int band) const {
  const auto it = std::find(bands_.begin(), bands_.end(), band);
  if (it == bands_.end()) throw DomainError(fmt::format("band {} is not in the filter tile", band));
  const auto i = static_cast<int>(it - bands_.begin());
  return {i % tile_width_, i / tile_width_};
}

Image mosaic(const HyperCube& cube, const MosaicPattern& pattern) {
  if (cube.bands() != pattern.band_count())
    throw DimensionError(fmt::format("mosaic needs a {}-band cube, got {}", pattern.band_count(),
                                     cube.bands()));
  Image out(cube.width(), cube.height());
  for (int y = 0; y < cube.height(); ++y)
    for (int x = 0; x < cube.width(); ++x) out(x, y) = cube.at(pattern.band_at(x, y), x, y);
  return out;
}

Image interpolate_band(const Image& sparse, const MosaicPattern& pattern, int band) {
  const auto [ox, oy] = pattern.cell_of(band);
  Image weights(sparse.width(), sparse.height(), 0.0f);
  for (int y = oy; y < sparse.height(); y += pattern.tile_height())
    for (int x = ox; x < sparse.width(); x += pattern.tile_width()) weights(x, y) = 1.0f;
  return normalized_convolution(sparse, weights, tent_kernel(pattern.tile_width()),
                                tent_kernel(pattern.tile_height()));
}

HyperCube demosaic_wbi(const Image& mosaic, const MosaicPattern& pattern) {
  check_mosaic(mosaic, pattern);
  std::vector<Image> bands;
  for (int c = 0; c < pattern.band_count(); ++c) bands.push_back(interpolate_band(mosaic, pattern, c));
  return clipped(std::move(bands));
}

HyperCube demosaic_sd(const Image& mosaic, const MosaicPattern& pattern, int reference_band) {
  check_mosaic(mosaic, pattern);
  check_reference(reference_band, pattern);
  return clipped(sd_unclipped(mosaic, pattern, reference_band));
}

HyperCube demosaic_isd(const Image& mosaic, const MosaicPattern& pattern, int iterations,
                       int reference_band) {
  check_mosaic(mosaic, pattern);
  check_reference(reference_band, pattern);
  if (iterations < 0) throw ConfigError("ISD iteration count must be non-negative");
  std::vector<Image> estimate = sd_unclipped(mosaic, pattern, reference_band);
  const int n = pattern.band_count();
  for (int it = 0; it < iterations; ++it) {
    std::vector<Image> next;
    next.reserve(estimate.size());
    for (int c = 0; c < n; ++c) {
      // Reference: mean of the spectrally adjacent bands of the previous estimate.
      Image reference(mosaic.width(), mosaic.height(), 0.0f);
      int count = 0;
      for (int nb : {c - 1, c + 1}) {
        if (nb < 0 || nb >= n) continue;
        auto r = reference.pixels();
        const auto e = estimate[static_cast<std::size_t>(nb)].pixels();
        for (std::size_t k = 0; k < r.size(); ++k) r[k] += e[k];
        ++count;
      }
      if (count == 0) {
        next.push_back(estimate[static_cast<std::size_t>(c)]);
        continue;
      }
      for (float& v : reference.pixels()) v /= static_cast<float>(count);
      next.push_back(spectral_difference(mosaic, pattern, c, reference));
    }
    estimate = std::move(next);
  }
  return clipped(std::move(estimate));
}

Image haar_forward(const Image& image) {
  if (image.width() % 2 || image.height() % 2) throw DimensionError("Haar transform needs even sizes");
  const int hw = image.width() / 2;
  const int hh = image.height() / 2;
  Image out(image.width(), image.height());
  for (int j = 0; j < hh; ++j) {
    for (int i = 0; i < hw; ++i) {
      const double a = image(2 * i, 2 * j), b = image(2 * i + 1, 2 * j);
      const double c = image(2 * i, 2 * j + 1), d = image(2 * i + 1, 2 * j + 1);
      out(i, j) = static_cast<float>((a + b + c + d) / 2.0);
      out(i + hw, j) = static_cast<float>((a - b + c - d) / 2.0);
      out(i, j + hh) = static_cast<float>((a + b - c - d) / 2.0);
      out(i + hw, j + hh) = static_cast<float>((a - b - c + d) / 2.0);
    }
  }
  return out;
}

Image haar_inverse(const Image& coefficients) {
  if (coefficients.width() % 2 || coefficients.height() % 2)
    throw DimensionError("Haar transform needs even sizes");
  const int hw = coefficients.width() / 2;
  const int hh = coefficients.height() / 2;
  Image out(coefficients.width(), coefficients.height());
  for (int j = 0; j < hh; ++j) {
    for (int i = 0; i < hw; ++i) {
      const double ll = coefficients(i, j), hl = coefficients(i + hw, j);
      const double lh = coefficients(i, j + hh), hh_ = coefficients(i + hw, j + hh);
      out(2 * i, 2 * j) = static_cast<float>((ll + hl + lh + hh_) / 2.0);
      out(2 * i + 1, 2 * j) = static_cast<float>((ll - hl + lh - hh_) / 2.0);
      out(2 * i, 2 * j + 1) = static_cast<float>((ll + hl - lh - hh_) / 2.0);
      out(2 * i + 1, 2 * j + 1) = static_cast<float>((ll - hl - lh + hh_) / 2.0);
    }
  }
  return out;
}

HyperCube demosaic_dwt(const Image& mosaic, const MosaicPattern& pattern) {
  check_mosaic(mosaic, pattern);
  const int w = mosaic.width();
  const int h = mosaic.height();
  // Pseudo-panchromatic image: mosaic averaged over one filter period.
  const Image ppi = normalized_convolution(mosaic, Image(w, h, 1.0f),
                                           period_average_kernel(pattern.tile_width()),
                                           period_average_kernel(pattern.tile_height()));
  const int ew = w - w % 2;
  const int eh = h - h % 2;
  auto crop = [&](const Image& src) {
    Image out(ew, eh);
    for (int y = 0; y < eh; ++y)
      for (int x = 0; x < ew; ++x) out(x, y) = src(x, y);
    return out;
  };
  const Image pan = haar_forward(crop(ppi));

  std::vector<Image> bands;
  for (int c = 0; c < pattern.band_count(); ++c) {
    Image band = interpolate_band(mosaic, pattern, c);
    Image coeff = haar_forward(crop(band));
    for (int y = 0; y < eh; ++y)
      for (int x = 0; x < ew; ++x)
        if (x >= ew / 2 || y >= eh / 2) coeff(x, y) = pan(x, y);
    const Image merged = haar_inverse(coeff);
    for (int y = 0; y < eh; ++y)
      for (int x = 0; x < ew; ++x) band(x, y) = merged(x, y);
    bands.push_back(std::move(band));
  }
  return clipped(std::move(bands));
}

}  // namespace hexspec
