#include "hexspec/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hexspec/errors.hpp"

namespace hexspec {
namespace {

struct RingPoint {
  int ring;
  double angle;
  Vec2 position;
};

double angle_of(const Vec2& p) {
  double a = std::atan2(p.y, p.x);
  if (a < -1e-12) a += 2.0 * std::numbers::pi;
  return std::max(a, 0.0);
}

// Sorts lattice points center-outward, counter-clockwise from +x within a ring,
// and hands out bands 18, 17, 19, 16, 20, ... so spectral neighbours stay close.
ArrayLayout spiral_layout(LayoutKind kind, double spacing, std::vector<RingPoint> points) {
  std::sort(points.begin(), points.end(), [](const RingPoint& a, const RingPoint& b) {
    if (a.ring != b.ring) return a.ring < b.ring;
    return a.angle < b.angle - 1e-12;
  });
  std::vector<Vec2> positions(points.size());
  std::vector<int> bands(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const int step = static_cast<int>((k + 1) / 2);
    const int band = (k % 2 == 1) ? kCenterBand - step : kCenterBand + step;
    positions[static_cast<std::size_t>(band)] = points[k].position;
    bands[static_cast<std::size_t>(band)] = band;
  }
  auto layout = make_layout(kind, spacing, positions, bands);
  layout.validate();
  return layout;
}

void require_positive_spacing(double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ConfigError(fmt::format("lattice spacing must be positive, got {}", spacing));
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::string to_string(LayoutKind kind) {
  return kind == LayoutKind::hexagonal ? "hexagonal" : "orthogonal";
}

LayoutKind layout_kind_from_string(const std::string& text) {
  if (text == "hexagonal" || text == "hex") return LayoutKind::hexagonal;
  if (text == "orthogonal" || text == "ortho") return LayoutKind::orthogonal;
  throw ConfigError(fmt::format("unknown layout kind '{}'", text));
}

const CameraPose& ArrayLayout::center() const {
  for (const auto& p : poses)
    if (p.is_center()) return p;
  throw ConfigError("layout has no center camera");
}

const CameraPose& ArrayLayout::camera_for_band(int band) const {
  for (const auto& p : poses)
    if (p.band == band) return p;
  throw ConfigError(fmt::format("no camera records band {}", band));
}

double ArrayLayout::max_baseline() const {
  double m = 0.0;
  for (const auto& p : poses) m = std::max(m, p.baseline_mm);
  return m;
}

std::vector<CameraPose> ArrayLayout::nearest_neighbors(int count) const {
  std::vector<CameraPose> peripheral;
  for (const auto& p : poses)
    if (!p.is_center()) peripheral.push_back(p);
  std::stable_sort(peripheral.begin(), peripheral.end(), [](const CameraPose& a, const CameraPose& b) {
    if (std::abs(a.baseline_mm - b.baseline_mm) > 1e-9 * std::max(a.baseline_mm, b.baseline_mm))
      return a.baseline_mm < b.baseline_mm;
    return a.id < b.id;
  });
  if (count < static_cast<int>(peripheral.size())) peripheral.resize(static_cast<std::size_t>(count));
  return peripheral;
}

void ArrayLayout::validate() const {
  require_positive_spacing(spacing_mm);
  if (poses.size() != static_cast<std::size_t>(kArrayCameras))
    throw ConfigError(fmt::format("layout must hold {} cameras, has {}", kArrayCameras, poses.size()));
  int centers = 0;
  for (const auto& p : poses) centers += p.is_center();
  if (centers != 1)
    throw ConfigError(fmt::format("layout must have exactly one camera at the origin, has {}", centers));
  const double tol = 1e-6 * spacing_mm;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (poses[i].id != static_cast<int>(i)) throw ConfigError("camera ids must equal their index");
    double nearest = INFINITY;
    for (std::size_t j = 0; j < poses.size(); ++j) {
      if (i == j) continue;
      const double d = std::hypot(poses[i].position.x - poses[j].position.x,
                                  poses[i].position.y - poses[j].position.y);
      if (d < tol) throw ConfigError(fmt::format("cameras {} and {} coincide", i, j));
      nearest = std::min(nearest, d);
    }
    if (std::abs(nearest - spacing_mm) > tol)
      throw ConfigError(fmt::format("camera {} nearest neighbour at {} mm, expected {}", i, nearest,
                                    spacing_mm));
  }
}

ArrayLayout make_layout(LayoutKind kind, double spacing_mm, const std::vector<Vec2>& positions,
                        const std::vector<int>& bands) {
  if (positions.size() != bands.size()) throw ConfigError("positions and bands differ in length");
  ArrayLayout layout{kind, spacing_mm, {}};
  layout.poses.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    CameraPose pose;
    pose.id = static_cast<int>(i);
    pose.position = positions[i];
    pose.band = bands[i];
    pose.baseline_mm = std::hypot(positions[i].x, positions[i].y);
    if (pose.baseline_mm < 1e-9 * std::max(spacing_mm, 1.0)) {
      pose.baseline_mm = 0.0;
      pose.epipolar = {0.0, 0.0};
    } else {
      pose.epipolar = {positions[i].x / pose.baseline_mm, positions[i].y / pose.baseline_mm};
    }
    layout.poses.push_back(pose);
  }
  return layout;
}

ArrayLayout build_hexagonal_layout(double spacing_mm) {
  require_positive_spacing(spacing_mm);
  std::vector<RingPoint> points;
  const double h = std::sqrt(3.0) / 2.0;
  for (int q = -3; q <= 3; ++q) {
    for (int r = -3; r <= 3; ++r) {
      const int ring = std::max({std::abs(q), std::abs(r), std::abs(q + r)});
      if (ring > 3) continue;
      const Vec2 p{spacing_mm * (q + 0.5 * r), spacing_mm * h * r};
      points.push_back({ring, angle_of(p), p});
    }
  }
  return spiral_layout(LayoutKind::hexagonal, spacing_mm, std::move(points));
}

ArrayLayout build_orthogonal_layout(double spacing_mm) {
  require_positive_spacing(spacing_mm);
  std::vector<RingPoint> points;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -3; j <= 3; ++j) {
      const int r2 = i * i + j * j;
      if (r2 > 10) continue;
      const Vec2 p{spacing_mm * i, spacing_mm * j};
      points.push_back({r2, angle_of(p), p});
    }
  }
  return spiral_layout(LayoutKind::orthogonal, spacing_mm, std::move(points));
}

ArrayLayout build_layout(LayoutKind kind, double spacing_mm) {
  return kind == LayoutKind::hexagonal ? build_hexagonal_layout(spacing_mm)
                                       : build_orthogonal_layout(spacing_mm);
}

// Andrew's monotone chain.
std::vector<Vec2> convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return points;
  double scale = 0.0;
  for (const auto& p : points) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double eps = 1e-12 * scale * scale;
  std::vector<Vec2> hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= eps) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= eps) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const std::vector<Vec2>& polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % polygon.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2.0;
}

double polygon_perimeter(const std::vector<Vec2>& polygon) {
  if (polygon.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % polygon.size()];
    total += std::hypot(b.x - a.x, b.y - a.y);
  }
  // A two-point "polygon" is a segment traversed twice, which is the
  // perimeter of its degenerate hull.
  return total;
}

double convex_hull_area(const ArrayLayout& layout, double footprint_radius_mm) {
  if (!(footprint_radius_mm >= 0.0)) throw DomainError("footprint radius must be non-negative");
  std::vector<Vec2> points;
  points.reserve(layout.poses.size());
  for (const auto& p : layout.poses) points.push_back(p.position);
  const auto hull = convex_hull(std::move(points));
  const double r = footprint_radius_mm;
  return polygon_area(hull) + polygon_perimeter(hull) * r + std::numbers::pi * r * r;
}

double data_rate_gbps(double cameras, double width_px, double height_px, double bits_per_px,
                      double fps) {
  for (double v : {cameras, width_px, height_px, bits_per_px, fps})
    if (!(v > 0.0)) throw DomainError("data rate factors must be positive");
  return cameras * width_px * height_px * bits_per_px * fps / 1e9;
}

nlohmann::json layout_to_json(const ArrayLayout& layout) {
  nlohmann::json cams = nlohmann::json::array();
  for (const auto& p : layout.poses)
    cams.push_back({{"id", p.id}, {"x", p.position.x}, {"y", p.position.y}, {"band", p.band}});
  return {{"kind", to_string(layout.kind)}, {"spacing_mm", layout.spacing_mm}, {"cameras", cams}};
}

ArrayLayout layout_from_json(const nlohmann::json& j) {
  try {
    const auto kind = layout_kind_from_string(j.at("kind").get<std::string>());
    const double spacing = j.at("spacing_mm").get<double>();
    const auto& cams = j.at("cameras");
    std::vector<Vec2> positions(cams.size());
    std::vector<int> bands(cams.size(), -1);
    for (const auto& c : cams) {
      const int id = c.at("id").get<int>();
      if (id < 0 || id >= static_cast<int>(cams.size()) || bands[static_cast<std::size_t>(id)] != -1)
        throw ConfigError(fmt::format("camera id {} is out of range or repeated", id));
      positions[static_cast<std::size_t>(id)] = {c.at("x").get<double>(), c.at("y").get<double>()};
      bands[static_cast<std::size_t>(id)] = c.at("band").get<int>();
    }
    auto layout = make_layout(kind, spacing, positions, bands);
    layout.validate();
    return layout;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("invalid layout description: {}", e.what()));
  }
}

void save_layout(const std::filesystem::path& path, const ArrayLayout& layout) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << layout_to_json(layout).dump(2) << '\n';
}

ArrayLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  try {
    return layout_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

}  // namespace hexspec
