#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hexspec {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

enum class LayoutKind { hexagonal, orthogonal };

std::string to_string(LayoutKind kind);
LayoutKind layout_kind_from_string(const std::string& text);

/// One camera of the array. Positions are in mm in the array plane; the
/// epipolar direction points from the center camera toward this one.
struct CameraPose {
  int id = 0;
  Vec2 position;
  int band = 0;
  double baseline_mm = 0.0;
  Vec2 epipolar;

  bool is_center() const { return baseline_mm == 0.0; }
};

struct ArrayLayout {
  LayoutKind kind = LayoutKind::hexagonal;
  double spacing_mm = 60.0;
  std::vector<CameraPose> poses;  // indexed by id

  const CameraPose& center() const;
  const CameraPose& camera_for_band(int band) const;
  double max_baseline() const;
  /// The `count` peripheral cameras closest to the center (ties broken by id).
  std::vector<CameraPose> nearest_neighbors(int count) const;
  /// Throws ConfigError unless the layout has exactly one center, distinct
  /// positions and a non-degenerate spacing.
  void validate() const;
};

inline constexpr int kArrayCameras = 37;
inline constexpr int kCenterBand = 18;

ArrayLayout build_hexagonal_layout(double spacing_mm);
ArrayLayout build_orthogonal_layout(double spacing_mm);
ArrayLayout build_layout(LayoutKind kind, double spacing_mm);

/// Builds a layout from explicit camera positions/bands, deriving baselines
/// and epipolar directions relative to the camera at the origin.
ArrayLayout make_layout(LayoutKind kind, double spacing_mm, const std::vector<Vec2>& positions,
                        const std::vector<int>& bands);

/// Convex hull (counter-clockwise, no collinear points) of a point set.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);
double polygon_area(const std::vector<Vec2>& polygon);
double polygon_perimeter(const std::vector<Vec2>& polygon);

/// Area of the hull of all camera positions dilated by a disc of `footprint_radius_mm`.
double convex_hull_area(const ArrayLayout& layout, double footprint_radius_mm = 0.0);

/// Raw sensor throughput in Gbit/s.
double data_rate_gbps(double cameras, double width_px, double height_px, double bits_per_px,
                      double fps);

nlohmann::json layout_to_json(const ArrayLayout& layout);
ArrayLayout layout_from_json(const nlohmann::json& j);
void save_layout(const std::filesystem::path& path, const ArrayLayout& layout);
ArrayLayout load_layout(const std::filesystem::path& path);

}  // namespace hexspec
