#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hexspec/errors.hpp"
#include "hexspec/parallel.hpp"
#include "hexspec/registration.hpp"

namespace hexspec {
namespace {

// In-place box sum over a (2r+1)^2 window with clamped borders.
void box_aggregate(std::vector<float>& cost, int width, int height, int radius) {
  if (radius <= 0) return;
  std::vector<float> tmp(cost.size());
  std::vector<double> line;
  for (int y = 0; y < height; ++y) {
    const float* row = cost.data() + static_cast<std::size_t>(y) * width;
    line.assign(static_cast<std::size_t>(width) + 1, 0.0);
    for (int x = 0; x < width; ++x) line[static_cast<std::size_t>(x) + 1] = line[static_cast<std::size_t>(x)] + row[x];
    for (int x = 0; x < width; ++x) {
      const int lo = std::max(0, x - radius);
      const int hi = std::min(width - 1, x + radius);
      tmp[static_cast<std::size_t>(y) * width + x] =
          static_cast<float>(line[static_cast<std::size_t>(hi) + 1] - line[static_cast<std::size_t>(lo)]);
    }
  }
  line.assign(static_cast<std::size_t>(height) + 1, 0.0);
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y)
      line[static_cast<std::size_t>(y) + 1] = line[static_cast<std::size_t>(y)] + tmp[static_cast<std::size_t>(y) * width + x];
    for (int y = 0; y < height; ++y) {
      const int lo = std::max(0, y - radius);
      const int hi = std::min(height - 1, y + radius);
      cost[static_cast<std::size_t>(y) * width + x] =
          static_cast<float>(line[static_cast<std::size_t>(hi) + 1] - line[static_cast<std::size_t>(lo)]);
    }
  }
}

Image shifted_view(const Image& source, double dx, double dy) {
  Image out(source.width(), source.height());
  for (int y = 0; y < source.height(); ++y)
    for (int x = 0; x < source.width(); ++x) out(x, y) = source.bilinear(x + dx, y + dy);
  return out;
}

// Unreliable pixels take the smaller of the nearest reliable disparities to
// the left and right; rows without any reliable pixel fall back to columns,
// then to zero.
void fill_unreliable(Image& disparity, const Image& confidence) {
  const int w = disparity.width();
  const int h = disparity.height();
  Mask known(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) known(x, y) = confidence(x, y) > 0.0f;
  Mask filled = known;
  Image out = disparity;
  std::vector<float> left(static_cast<std::size_t>(w)), right(static_cast<std::size_t>(w));
  constexpr float kNone = std::numeric_limits<float>::infinity();
  for (int y = 0; y < h; ++y) {
    float last = kNone;
    for (int x = 0; x < w; ++x) {
      if (known(x, y)) last = disparity(x, y);
      left[static_cast<std::size_t>(x)] = last;
    }
    last = kNone;
    for (int x = w - 1; x >= 0; --x) {
      if (known(x, y)) last = disparity(x, y);
      right[static_cast<std::size_t>(x)] = last;
    }
    for (int x = 0; x < w; ++x) {
      if (known(x, y)) continue;
      const float v = std::min(left[static_cast<std::size_t>(x)], right[static_cast<std::size_t>(x)]);
      if (v != kNone) {
        out(x, y) = v;
        filled(x, y) = 1;
      }
    }
  }
  std::vector<float> up(static_cast<std::size_t>(h)), down(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    float last = kNone;
    for (int y = 0; y < h; ++y) {
      if (filled(x, y)) last = out(x, y);
      up[static_cast<std::size_t>(y)] = last;
    }
    last = kNone;
    for (int y = h - 1; y >= 0; --y) {
      if (filled(x, y)) last = out(x, y);
      down[static_cast<std::size_t>(y)] = last;
    }
    for (int y = 0; y < h; ++y) {
      if (filled(x, y)) continue;
      const float v = std::min(up[static_cast<std::size_t>(y)], down[static_cast<std::size_t>(y)]);
      out(x, y) = v == kNone ? 0.0f : v;
    }
  }
  disparity = std::move(out);
}

}  // namespace

std::vector<std::uint64_t> census_transform(const Image& image, int window_width, int window_height) {
  if (window_width < 1 || window_height < 1 || window_width % 2 == 0 || window_height % 2 == 0 ||
      window_width * window_height - 1 > 64)
    throw ConfigError(fmt::format("census window {}x{} must be odd and hold at most 64 neighbours",
                                  window_width, window_height));
  const int rx = window_width / 2;
  const int ry = window_height / 2;
  const int w = image.width();
  const int h = image.height();
  std::vector<std::uint64_t> out(image.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float c = image(x, y);
      std::uint64_t bits = 0;
      const bool interior = x >= rx && x < w - rx && y >= ry && y < h - ry;
      for (int dy = -ry; dy <= ry; ++dy) {
        for (int dx = -rx; dx <= rx; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const float v = interior ? image(x + dx, y + dy) : image.clamped(x + dx, y + dy);
          bits = (bits << 1) | static_cast<std::uint64_t>(v < c);
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = bits;
    }
  }
  return out;
}

DisparityMap estimate_disparity(const Image& center, std::span<const PeripheralView> peripherals,
                                double reference_baseline_mm, const DisparityParams& params) {
  if (peripherals.size() < 2)
    throw ConfigError(fmt::format("disparity estimation needs at least 2 peripheral views, got {}",
                                  peripherals.size()));
  if (!(params.max_disparity > 0.0) || params.max_disparity > center.width() / 4.0)
    throw ConfigError(fmt::format("max disparity {} must lie in (0, {}]", params.max_disparity,
                                  center.width() / 4.0));
  if (!(params.step > 0.0)) throw ConfigError("disparity step must be positive");
  if (!(reference_baseline_mm > 0.0)) throw ConfigError("reference baseline must be positive");
  for (const auto& p : peripherals) {
    if (!p.image.get().same_size(center)) throw DimensionError("peripheral view size differs from center");
    if (p.pose.is_center()) throw ConfigError("peripheral view has zero baseline");
  }

  const int w = center.width();
  const int h = center.height();
  const auto npx = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const int candidates = static_cast<int>(std::floor(params.max_disparity / params.step + 1e-9)) + 1;
  const auto center_census = census_transform(center, params.census_width, params.census_height);

  std::vector<std::vector<float>> volume(static_cast<std::size_t>(candidates));
  parallel_for(static_cast<std::size_t>(candidates), params.threads, [&](std::size_t i) {
    const double d = static_cast<double>(i) * params.step;
    std::vector<float> total(npx, 0.0f);
    std::vector<float> cost(npx);
    for (const auto& view : peripherals) {
      const double s = d * view.pose.baseline_mm / reference_baseline_mm;
      const Image warped = shifted_view(view.image.get(), -s * view.pose.epipolar.x, -s * view.pose.epipolar.y);
      const auto census = census_transform(warped, params.census_width, params.census_height);
      for (std::size_t k = 0; k < npx; ++k)
        cost[k] = static_cast<float>(std::popcount(census[k] ^ center_census[k]));
      box_aggregate(cost, w, h, params.aggregation_radius);
      for (std::size_t k = 0; k < npx; ++k) total[k] += cost[k];
    }
    volume[i] = std::move(total);
  });

  DisparityMap out{Image(w, h), Image(w, h)};
  auto disp = out.disparity.pixels();
  auto conf = out.confidence.pixels();
  for (std::size_t k = 0; k < npx; ++k) {
    int best = 0;
    float best_cost = volume[0][k];
    for (int i = 1; i < candidates; ++i) {
      const float c = volume[static_cast<std::size_t>(i)][k];
      if (c < best_cost) {
        best_cost = c;
        best = i;
      }
    }
    float second = std::numeric_limits<float>::infinity();
    for (int i = 0; i < candidates; ++i)
      if (std::abs(i - best) > 1) second = std::min(second, volume[static_cast<std::size_t>(i)][k]);
    double refined = best;
    if (best > 0 && best < candidates - 1) {
      const double cm = volume[static_cast<std::size_t>(best - 1)][k];
      const double cp = volume[static_cast<std::size_t>(best + 1)][k];
      const double denom = cm - 2.0 * best_cost + cp;
      if (denom > 0.0) refined += std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
    }
    disp[k] = static_cast<float>(std::clamp(refined * params.step, 0.0, params.max_disparity));
    const double margin =
        (std::isfinite(second) && second > 0.0f) ? (second - best_cost) / second : 0.0;
    conf[k] = margin >= params.confidence_threshold ? static_cast<float>(std::clamp(margin, 0.0, 1.0))
                                                    : 0.0f;
  }
  fill_unreliable(out.disparity, out.confidence);
  return out;
}

}  // namespace hexspec
