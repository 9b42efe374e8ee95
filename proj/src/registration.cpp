#include "hexspec/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hexspec/errors.hpp"
#include "hexspec/parallel.hpp"

namespace hexspec {
namespace {

double baseline_ratio(const CameraPose& pose, double reference_baseline_mm) {
  if (!(reference_baseline_mm > 0.0)) throw ConfigError("reference baseline must be positive");
  return pose.baseline_mm / reference_baseline_mm;
}

void dilate_zeros(Mask& mask, int radius) {
  if (radius <= 0) return;
  const Mask src = mask;
  const int w = mask.width();
  const int h = mask.height();
  const int r2 = radius * radius;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (src(x, y) == 0) continue;
      bool hit = false;
      for (int dy = -radius; dy <= radius && !hit; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w || dx * dx + dy * dy > r2) continue;
          if (src(xx, yy) == 0) {
            hit = true;
            break;
          }
        }
      }
      if (hit) mask(x, y) = 0;
    }
  }
}

struct AffineFit {
  double slope = 0.0;
  double offset = 0.0;
  int support = 0;
};

// Gaussian-weighted least squares of value ~ slope * guide + offset over the
// known pixels in a square window.
AffineFit fit_window(const Image& values, const Mask& known, const Image& guide, const Image* disparity,
                     int cx, int cy, int half, const ReconstructionParams& params) {
  const double sigma = std::max(1.0, (2.0 * half + 1.0) / 4.0);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  double sw = 0.0, sg = 0.0, sv = 0.0, sgg = 0.0, sgv = 0.0;
  int support = 0;
  const float max_disparity =
      disparity ? (*disparity)(cx, cy) + static_cast<float>(params.depth_tolerance) : 0.0f;
  const int y0 = std::max(0, cy - half), y1 = std::min(values.height() - 1, cy + half);
  const int x0 = std::max(0, cx - half), x1 = std::min(values.width() - 1, cx + half);
  for (int y = y0; y <= y1; ++y) {
    const double dy2 = static_cast<double>(y - cy) * (y - cy);
    for (int x = x0; x <= x1; ++x) {
      if (!known(x, y)) continue;
      if (disparity && (*disparity)(x, y) > max_disparity) continue;
      const double wgt = std::exp(-(dy2 + static_cast<double>(x - cx) * (x - cx)) * inv2s2);
      const double g = guide(x, y);
      const double v = values(x, y);
      sw += wgt;
      sg += wgt * g;
      sv += wgt * v;
      sgg += wgt * g * g;
      sgv += wgt * g * v;
      ++support;
    }
  }
  AffineFit fit;
  fit.support = support;
  if (support == 0 || sw <= 0.0) return fit;
  const double mg = sg / sw;
  const double mv = sv / sw;
  const double var = std::max(0.0, sgg / sw - mg * mg);
  const double cov = sgv / sw - mg * mv;
  fit.slope = var > 1e-14 ? cov / (var + params.regularization) : 0.0;
  fit.offset = mv - fit.slope * mg;
  return fit;
}

RegistrationResult register_impl(std::span<const Image> capture, const ArrayLayout& layout,
                                 DisparityMap disparity, const RegistrationParams& params) {
  const CameraPose& center = layout.center();
  const Image& guide = capture[static_cast<std::size_t>(center.id)];
  const double reference = layout.spacing_mm;

  std::vector<Image> bands(capture.size());
  std::vector<Mask> visibility(capture.size());
  parallel_for(capture.size(), params.threads, [&](std::size_t i) {
    const CameraPose& pose = layout.poses[i];
    if (pose.is_center()) {
      bands[static_cast<std::size_t>(pose.band)] = guide;
      visibility[i] = Mask(guide.width(), guide.height(), 1);
      return;
    }
    WarpedChannel warped = warp_to_center(capture[i], disparity.disparity, pose, reference);
    Mask visible = detect_occlusions(disparity.disparity, pose, reference, params.occlusion);
    auto v = warped.values.pixels();
    const auto m = visible.cells();
    for (std::size_t k = 0; k < v.size(); ++k)
      if (!m[k]) v[k] = 0.0f;
    try {
      bands[static_cast<std::size_t>(pose.band)] =
          reconstruct_occluded(warped, visible, guide, disparity.disparity, params.reconstruction);
    } catch (const ReconstructionError& e) {
      throw ReconstructionError(fmt::format("camera {} (band {}): {}", pose.id, pose.band, e.what()));
    }
    visibility[i] = std::move(visible);
  });
  return {HyperCube(std::move(bands)), std::move(disparity), std::move(visibility)};
}

void validate_capture(std::span<const Image> capture, const ArrayLayout& layout) {
  layout.validate();
  if (capture.size() != layout.poses.size())
    throw ConfigError(fmt::format("capture holds {} views for {} cameras", capture.size(),
                                  layout.poses.size()));
  std::vector<int> seen(layout.poses.size(), 0);
  for (const auto& p : layout.poses) {
    if (p.band < 0 || p.band >= static_cast<int>(layout.poses.size()) || seen[static_cast<std::size_t>(p.band)]++)
      throw ConfigError("layout bands must be a permutation of the camera ids");
  }
  for (const auto& img : capture)
    if (!img.same_size(capture.front())) throw DimensionError("capture views differ in size");
}

}  // namespace

WarpedChannel warp_to_center(const Image& source, const Image& disparity, const CameraPose& pose,
                             double reference_baseline_mm) {
  if (!disparity.same_size(source)) throw DimensionError("disparity map and source differ in size");
  const double ratio = pose.is_center() ? 0.0 : baseline_ratio(pose, reference_baseline_mm);
  const int w = source.width();
  const int h = source.height();
  WarpedChannel out{Image(w, h), Mask(w, h, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double s = disparity(x, y) * ratio;
      const double sx = x - s * pose.epipolar.x;
      const double sy = y - s * pose.epipolar.y;
      if (!source.contains(sx, sy)) {
        out.valid(x, y) = 0;
        continue;
      }
      // Integer positions are read directly so that a zero warp is an exact copy.
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      out.values(x, y) = (sx == fx && sy == fy) ? source(static_cast<int>(fx), static_cast<int>(fy))
                                                 : source.bilinear(sx, sy);
    }
  }
  return out;
}

Mask detect_occlusions(const Image& disparity, const CameraPose& pose, double reference_baseline_mm,
                       const OcclusionParams& params) {
  const int w = disparity.width();
  const int h = disparity.height();
  Mask visible(w, h, 1);
  if (pose.is_center()) return visible;
  const double ratio = baseline_ratio(pose, reference_baseline_mm);

  // Forward-map every pixel into the peripheral view and bin the samples by cell.
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> qx(n), qy(n);
  std::vector<int> cell(n, -1);
  std::vector<int> bucket_start(n + 1, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t k = static_cast<std::size_t>(y) * w + x;
      const double d = disparity(x, y);
      qx[k] = x - d * ratio * pose.epipolar.x;
      qy[k] = y - d * ratio * pose.epipolar.y;
      if (qx[k] < 0.0 || qy[k] < 0.0 || qx[k] > w - 1 || qy[k] > h - 1) continue;
      cell[k] = static_cast<int>(std::lround(qy[k])) * w + static_cast<int>(std::lround(qx[k]));
      ++bucket_start[static_cast<std::size_t>(cell[k]) + 1];
    }
  }
  for (std::size_t c = 0; c < n; ++c) bucket_start[c + 1] += bucket_start[c];
  std::vector<int> members(static_cast<std::size_t>(bucket_start[n]));
  {
    std::vector<int> fill(bucket_start.begin(), bucket_start.end() - 1);
    for (std::size_t k = 0; k < n; ++k)
      if (cell[k] >= 0) members[static_cast<std::size_t>(fill[static_cast<std::size_t>(cell[k])]++)] = static_cast<int>(k);
  }
  // A pixel is hidden when a nearer sample lands within half a pixel of it on both axes.
  const auto d = disparity.pixels();
  for (std::size_t k = 0; k < n; ++k) {
    if (cell[k] < 0) continue;
    const int cx = cell[k] % w;
    const int cy = cell[k] / w;
    bool hidden = false;
    for (int ny = std::max(cy - 1, 0); ny <= std::min(cy + 1, h - 1) && !hidden; ++ny) {
      for (int nx = std::max(cx - 1, 0); nx <= std::min(cx + 1, w - 1) && !hidden; ++nx) {
        const std::size_t c = static_cast<std::size_t>(ny) * w + nx;
        for (int m = bucket_start[c]; m < bucket_start[c + 1]; ++m) {
          const auto j = static_cast<std::size_t>(members[static_cast<std::size_t>(m)]);
          if (d[j] - d[k] > params.depth_tolerance && std::abs(qx[j] - qx[k]) <= 0.5 &&
              std::abs(qy[j] - qy[k]) <= 0.5) {
            hidden = true;
            break;
          }
        }
      }
    }
    if (hidden) visible.cells()[k] = 0;
  }
  // Out-of-bounds samples are exact, so only z-buffer occlusions are dilated.
  dilate_zeros(visible, params.dilation_radius);
  for (std::size_t k = 0; k < n; ++k)
    if (cell[k] < 0) visible.cells()[k] = 0;
  return visible;
}

namespace {

Image reconstruct_impl(const WarpedChannel& warped, const Mask& visible, const Image& guide,
                       const Image* disparity, const ReconstructionParams& params) {
  const Image& values = warped.values;
  if (!values.same_size(guide) || visible.width() != values.width() ||
      visible.height() != values.height() || warped.valid.width() != values.width() ||
      warped.valid.height() != values.height())
    throw DimensionError("warped channel, mask and guide must share one size");
  if (disparity && !disparity->same_size(values))
    throw DimensionError("disparity map and warped channel differ in size");
  if (params.window < 1 || params.min_valid < 1)
    throw ConfigError("reconstruction window and minimum support must be positive");
  const int w = values.width();
  const int h = values.height();
  Mask known(w, h, 0);
  for (std::size_t k = 0; k < known.size(); ++k)
    known.cells()[k] = warped.valid.cells()[k] && visible.cells()[k];
  if (known.count() == 0) throw ReconstructionError("channel has no valid pixels to regress from");

  Image out = values;
  const int full = std::max(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (known(x, y)) continue;
      int half = params.window / 2;
      AffineFit fit = fit_window(values, known, guide, disparity, x, y, half, params);
      while (fit.support < params.min_valid && half < full) {
        half = 2 * half + 1;
        fit = fit_window(values, known, guide, disparity, x, y, half, params);
      }
      out(x, y) = static_cast<float>(std::clamp(fit.slope * guide(x, y) + fit.offset, 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace

Image reconstruct_occluded(const WarpedChannel& warped, const Mask& visible, const Image& guide,
                           const ReconstructionParams& params) {
  return reconstruct_impl(warped, visible, guide, nullptr, params);
}

Image reconstruct_occluded(const WarpedChannel& warped, const Mask& visible, const Image& guide,
                           const Image& disparity, const ReconstructionParams& params) {
  return reconstruct_impl(warped, visible, guide, &disparity, params);
}

RegistrationResult register_all(std::span<const Image> capture, const ArrayLayout& layout,
                                const RegistrationParams& params) {
  validate_capture(capture, layout);
  const CameraPose& center = layout.center();
  std::vector<PeripheralView> neighbours;
  for (const auto& pose : layout.nearest_neighbors(params.disparity.neighbor_count))
    neighbours.push_back({std::cref(capture[static_cast<std::size_t>(pose.id)]), pose});
  DisparityParams dp = params.disparity;
  dp.threads = std::max(dp.threads, params.threads);
  auto disparity = estimate_disparity(capture[static_cast<std::size_t>(center.id)], neighbours,
                                      layout.spacing_mm, dp);
  return register_impl(capture, layout, std::move(disparity), params);
}

RegistrationResult register_with_disparity(std::span<const Image> capture, const ArrayLayout& layout,
                                           const Image& disparity, const RegistrationParams& params) {
  validate_capture(capture, layout);
  if (!disparity.same_size(capture.front())) throw DimensionError("disparity map size differs from capture");
  DisparityMap map{disparity, Image(disparity.width(), disparity.height(), 1.0f)};
  return register_impl(capture, layout, std::move(map), params);
}

}  // namespace hexspec
