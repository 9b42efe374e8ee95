#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hexspec/errors.hpp"
#include "hexspec/parallel.hpp"
#include "hexspec/snapshot.hpp"

namespace hexspec {
// Band c is masked and then shifted by c columns (positive x) onto the sensor.
Image cassi_forward(const HyperCube& cube, const Mask& mask) {
  if (mask.width() != cube.width() || mask.height() != cube.height())
    throw DimensionError(fmt::format("mask {}x{} does not match cube {}x{}", mask.width(),
                                     mask.height(), cube.width(), cube.height()));
  const int w = cube.width();
  const int h = cube.height();
  Image out(w + cube.bands() - 1, h, 0.0f);
  for (int c = 0; c < cube.bands(); ++c) {
    const Image& band = cube.band(c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (mask(x, y)) out(x + c, y) += band(x, y);
  }
  return out;
}

HyperCube cassi_adjoint(const Image& measurement, const Mask& mask, int bands) {
  if (bands < 1) throw DimensionError("band count must be positive");
  if (measurement.width() != mask.width() + bands - 1 || measurement.height() != mask.height())
    throw DimensionError(fmt::format("measurement {}x{} does not match a {}x{} mask with {} bands",
                                     measurement.width(), measurement.height(), mask.width(),
                                     mask.height(), bands));
  HyperCube cube(mask.width(), mask.height(), bands);
  for (int c = 0; c < bands; ++c) {
    Image& band = cube.band(c);
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x)
        if (mask(x, y)) band(x, y) = measurement(x + c, y);
  }
  return cube;
}

Image cassi_gram_diagonal(const Mask& mask, int bands) {
  if (bands < 1) throw DimensionError("band count must be positive");
  Image diag(mask.width() + bands - 1, mask.height(), 0.0f);
  for (int c = 0; c < bands; ++c)
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x)
        if (mask(x, y)) diag(x + c, y) += 1.0f;
  return diag;
}

Image tv_denoise(const Image& noisy, double weight, int steps) {
  if (!(weight > 0.0) || steps <= 0) return noisy;
  const int w = noisy.width();
  const int h = noisy.height();
  constexpr double kTau = 0.24;
  std::vector<double> px(noisy.size(), 0.0), py(noisy.size(), 0.0), div(noisy.size(), 0.0);
  auto at = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  const double inv_weight = 1.0 / weight;
  for (int s = 0; s < steps; ++s) {
    // div p with backward differences (adjoint of the forward-difference gradient).
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double d = 0.0;
        if (x < w - 1) d += px[at(x, y)];
        if (x > 0) d -= px[at(x - 1, y)];
        if (y < h - 1) d += py[at(x, y)];
        if (y > 0) d -= py[at(x, y - 1)];
        div[at(x, y)] = d - noisy(x, y) * inv_weight;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double g = div[at(x, y)];
        const double gx = x < w - 1 ? div[at(x + 1, y)] - g : 0.0;
        const double gy = y < h - 1 ? div[at(x, y + 1)] - g : 0.0;
        px[at(x, y)] = std::clamp(px[at(x, y)] + kTau * gx, -1.0, 1.0);
        py[at(x, y)] = std::clamp(py[at(x, y)] + kTau * gy, -1.0, 1.0);
      }
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double d = 0.0;
      if (x < w - 1) d += px[at(x, y)];
      if (x > 0) d -= px[at(x - 1, y)];
      if (y < h - 1) d += py[at(x, y)];
      if (y > 0) d -= py[at(x, y - 1)];
      out(x, y) = static_cast<float>(noisy(x, y) - weight * d);
    }
  }
  return out;
}

GapResult gap_tv_reconstruct(const Image& measurement, const Mask& mask, int bands,
                             const GapParams& params) {
  if (params.iterations < 1) throw ConfigError("GAP needs at least one iteration");
  Image gram = cassi_gram_diagonal(mask, bands);
  if (!gram.same_size(measurement)) throw DimensionError("measurement does not match mask and band count");
  for (float& v : gram.pixels()) v = std::max(v, 1.0f);

  auto normalized_residual = [&](const HyperCube& x, double* residual_norm) {
    Image r = cassi_forward(x, mask);
    auto rp = r.pixels();
    const auto yp = measurement.pixels();
    const auto gp = gram.pixels();
    double s = 0.0;
    for (std::size_t k = 0; k < rp.size(); ++k) {
      const double d = yp[k] - rp[k];
      s += d * d;
      rp[k] = static_cast<float>(d / gp[k]);
    }
    if (residual_norm) *residual_norm = std::sqrt(s);
    return r;
  };

  Image scaled = measurement;
  {
    auto sp = scaled.pixels();
    const auto gp = gram.pixels();
    for (std::size_t k = 0; k < sp.size(); ++k) sp[k] /= gp[k];
  }
  HyperCube x = cassi_adjoint(scaled, mask, bands);
  GapResult result;
  result.residuals.reserve(static_cast<std::size_t>(params.iterations));
  for (int it = 0; it < params.iterations; ++it) {
    double previous = 0.0;
    const Image correction = normalized_residual(x, &previous);
    if (it > 0) result.residuals.push_back(previous);
    const HyperCube back = cassi_adjoint(correction, mask, bands);
    parallel_for(static_cast<std::size_t>(bands), params.threads, [&](std::size_t c) {
      Image projected = x.band(static_cast<int>(c));
      auto pp = projected.pixels();
      const auto bp = back.band(static_cast<int>(c)).pixels();
      for (std::size_t k = 0; k < pp.size(); ++k) pp[k] += bp[k];
      x.band(static_cast<int>(c)) = tv_denoise(projected, params.tv_weight, params.tv_steps);
    });
  }
  double last = 0.0;
  normalized_residual(x, &last);
  result.residuals.push_back(last);
  x.clip_to_unit();
  result.cube = std::move(x);
  return result;
}

}  // namespace hexspec
