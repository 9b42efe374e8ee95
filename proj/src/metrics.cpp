#include "hexspec/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hexspec/errors.hpp"

namespace hexspec {
namespace {

void require_same_shape(const HyperCube& a, const HyperCube& b) {
  if (!a.same_shape(b))
    throw DimensionError(fmt::format("cube shapes differ: {}x{}x{} vs {}x{}x{}", a.width(), a.height(),
                                     a.bands(), b.width(), b.height(), b.bands()));
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double mid = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[static_cast<std::size_t>(i)] = std::exp(-(i - mid) * (i - mid) / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-mode separable filtering: output is (w - n + 1) x (h - n + 1).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[static_cast<std::size_t>(t)] * src[static_cast<std::size_t>(y) * w + x + t];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[static_cast<std::size_t>(t)] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

double ssim_formula(double mh, double mg, double vh, double vg, double cov, double g1, double g2) {
  return ((2.0 * mh * mg + g1) * (2.0 * cov + g2)) / ((mh * mh + mg * mg + g1) * (vh + vg + g2));
}

double band_ssim_global(const Image& a, const Image& b, double g1, double g2) {
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  const double n = static_cast<double>(pa.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ma += pa[i];
    mb += pb[i];
  }
  ma /= n;
  mb /= n;
  double va = 0.0, vb = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    va += (pa[i] - ma) * (pa[i] - ma);
    vb += (pb[i] - mb) * (pb[i] - mb);
    cov += (pa[i] - ma) * (pb[i] - mb);
  }
  return ssim_formula(ma, mb, va / n, vb / n, cov / n, g1, g2);
}

}  // namespace

double mse(const HyperCube& estimate, const HyperCube& truth) {
  require_same_shape(estimate, truth);
  double total = 0.0;
  for (int c = 0; c < truth.bands(); ++c) {
    const auto e = estimate.band(c).pixels();
    const auto t = truth.band(c).pixels();
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double d = static_cast<double>(e[i]) - t[i];
      total += d * d;
    }
  }
  return total / (static_cast<double>(truth.width()) * truth.height() * truth.bands());
}

double psnr_from_mse(double mean_squared_error, double peak) {
  if (mean_squared_error <= 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(peak) - 10.0 * std::log10(mean_squared_error);
}

double psnr(const HyperCube& estimate, const HyperCube& truth, double peak) {
  return psnr_from_mse(mse(estimate, truth), peak);
}

double ssim(const HyperCube& estimate, const HyperCube& truth, const SsimParams& params) {
  require_same_shape(estimate, truth);
  const int w = truth.width();
  const int h = truth.height();
  if (w < params.window || h < params.window) return ssim_global(estimate, truth, params.g1(), params.g2());
  const auto k = gaussian_window(params.window, params.sigma);
  const double g1 = params.g1();
  const double g2 = params.g2();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  double total = 0.0;
  std::size_t windows = 0;
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (int c = 0; c < truth.bands(); ++c) {
    const auto pa = estimate.band(c).pixels();
    const auto pb = truth.band(c).pixels();
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = pa[i];
      b[i] = pb[i];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto ma = filter_valid(a, w, h, k);
    const auto mb = filter_valid(b, w, h, k);
    const auto saa = filter_valid(aa, w, h, k);
    const auto sbb = filter_valid(bb, w, h, k);
    const auto sab = filter_valid(ab, w, h, k);
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double va = saa[i] - ma[i] * ma[i];
      const double vb = sbb[i] - mb[i] * mb[i];
      const double cov = sab[i] - ma[i] * mb[i];
      total += ssim_formula(ma[i], mb[i], va, vb, cov, g1, g2);
    }
    windows += ma.size();
  }
  return total / static_cast<double>(windows);
}

double ssim_global(const HyperCube& estimate, const HyperCube& truth, double g1, double g2) {
  require_same_shape(estimate, truth);
  double total = 0.0;
  for (int c = 0; c < truth.bands(); ++c) total += band_ssim_global(estimate.band(c), truth.band(c), g1, g2);
  return total / truth.bands();
}

HyperCube crop_intersection(const HyperCube& cube, int border_px) {
  if (border_px < 0 || 2 * border_px >= std::min(cube.width(), cube.height()))
    throw DimensionError(fmt::format("border {} px too large for a {}x{} image", border_px, cube.width(),
                                     cube.height()));
  if (border_px == 0) return cube;
  const int w = cube.width() - 2 * border_px;
  const int h = cube.height() - 2 * border_px;
  std::vector<Image> bands;
  bands.reserve(static_cast<std::size_t>(cube.bands()));
  for (const auto& src : cube.all_bands()) {
    Image out(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out(x, y) = src(x + border_px, y + border_px);
    bands.push_back(std::move(out));
  }
  return HyperCube(std::move(bands));
}

int intersection_border(int width_px) {
  return static_cast<int>(std::lround(200.0 * width_px / 2448.0));
}

std::string to_string(Region region) { return region == Region::full ? "full" : "intersected"; }

}  // namespace hexspec
