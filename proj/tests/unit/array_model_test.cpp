#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hexspec/array_model.hpp"
#include "hexspec/errors.hpp"

using namespace hexspec;

namespace {

// Gift wrapping over all point pairs: an edge is on the hull when every other
// point lies on its left or on the segment.
double brute_force_hull_area(const std::vector<Vec2>& pts) {
  std::vector<std::pair<Vec2, Vec2>> edges;
  for (const auto& a : pts)
    for (const auto& b : pts) {
      if (a.x == b.x && a.y == b.y) continue;
      bool hull = true;
      for (const auto& p : pts) {
        const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (cross < -1e-9) {
          hull = false;
          break;
        }
        if (std::abs(cross) <= 1e-9) {
          // Collinear points must lie between a and b for a maximal edge.
          const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) /
                           ((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y));
          if (t < -1e-9 || t > 1 + 1e-9) {
            hull = false;
            break;
          }
        }
      }
      if (hull) edges.push_back({a, b});
    }
  // Area via the divergence theorem over the directed hull edges.
  double area = 0;
  for (const auto& [a, b] : edges) area += a.x * b.y - b.x * a.y;
  return 0.5 * area;
}

std::vector<Vec2> positions(const ArrayLayout& layout) {
  std::vector<Vec2> out;
  for (const auto& p : layout.poses) out.push_back(p.position);
  return out;
}

double max_distance_scan(const ArrayLayout& layout) {
  double best = 0;
  for (const auto& p : layout.poses) best = std::max(best, std::hypot(p.position.x, p.position.y));
  return best;
}

}  // namespace

TEST(HexagonalLayout, ThirtySevenCamerasAndMaxBaseline) {
  const auto layout = build_hexagonal_layout(60.0);
  ASSERT_EQ(layout.poses.size(), 37u);
  EXPECT_NEAR(layout.max_baseline(), 180.0, 1e-9);
  EXPECT_NEAR(max_distance_scan(layout), 180.0, 1e-9);
  EXPECT_NO_THROW(layout.validate());
}

TEST(HexagonalLayout, NeighbourCounts) {
  const auto layout = build_hexagonal_layout(60.0);
  for (const auto& a : layout.poses) {
    int n = 0;
    for (const auto& b : layout.poses)
      if (a.id != b.id && std::abs(std::hypot(a.position.x - b.position.x, a.position.y - b.position.y) - 60.0) < 1e-9)
        ++n;
    EXPECT_GE(n, 2) << a.id;
    if (a.is_center()) EXPECT_EQ(n, 6);
  }
}

TEST(HexagonalLayout, RingSizes) {
  const auto layout = build_hexagonal_layout(60.0);
  std::map<int, int> rings;
  for (const auto& p : layout.poses) {
    // Hex ring index = ceil of baseline over the lattice spacing for the axial
    // lattice; ring k cameras lie between k*b*sqrt(3)/2 and k*b.
    const double d = p.baseline_mm / 60.0;
    int ring = 0;
    while (d > ring + 1e-9) ++ring;
    rings[ring]++;
  }
  EXPECT_EQ(rings[0], 1);
  EXPECT_EQ(rings[1], 6);
  EXPECT_EQ(rings[2] + rings[3], 30);
}

TEST(Layouts, ExactlyOneCenterAndUnitEpipolars) {
  for (auto kind : {LayoutKind::hexagonal, LayoutKind::orthogonal}) {
    for (double b : {1.0, 60.0, 75.5}) {
      const auto layout = build_layout(kind, b);
      int centers = 0;
      for (const auto& p : layout.poses) {
        if (p.baseline_mm == 0.0) {
          ++centers;
          EXPECT_EQ(p.epipolar.x, 0.0);
          EXPECT_EQ(p.epipolar.y, 0.0);
        } else {
          EXPECT_NEAR(std::hypot(p.epipolar.x, p.epipolar.y), 1.0, 1e-12);
          EXPECT_NEAR(p.epipolar.x * p.baseline_mm, p.position.x, 1e-9);
          EXPECT_NEAR(p.epipolar.y * p.baseline_mm, p.position.y, 1e-9);
        }
      }
      EXPECT_EQ(centers, 1);
      EXPECT_EQ(layout.center().band, kCenterBand);
    }
  }
}

TEST(Layouts, BandsFormAPermutation) {
  for (auto kind : {LayoutKind::hexagonal, LayoutKind::orthogonal}) {
    const auto layout = build_layout(kind, 60.0);
    std::set<int> bands;
    for (const auto& p : layout.poses) bands.insert(p.band);
    EXPECT_EQ(bands.size(), 37u);
    EXPECT_EQ(*bands.begin(), 0);
    EXPECT_EQ(*bands.rbegin(), 36);
    for (int c = 0; c < 37; ++c) EXPECT_EQ(layout.camera_for_band(c).band, c);
  }
}

TEST(Layouts, SpectralNeighboursSitCloseToTheCenter) {
  const auto layout = build_hexagonal_layout(60.0);
  EXPECT_NEAR(layout.camera_for_band(17).baseline_mm, 60.0, 1e-9);
  EXPECT_NEAR(layout.camera_for_band(19).baseline_mm, 60.0, 1e-9);
}

TEST(OrthogonalLayout, MaxBaselineAndHull) {
  const auto layout = build_orthogonal_layout(60.0);
  ASSERT_EQ(layout.poses.size(), 37u);
  EXPECT_NEAR(layout.max_baseline(), std::sqrt(10.0) * 60.0, 1e-9);
  EXPECT_NEAR(max_distance_scan(layout), 189.7366596, 1e-6);
  const auto hull = convex_hull(positions(layout));
  ASSERT_EQ(hull.size(), 8u);
  std::set<std::pair<long, long>> expected;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1}) {
      expected.insert({sx * 180, sy * 60});
      expected.insert({sx * 60, sy * 180});
    }
  std::set<std::pair<long, long>> got;
  for (const auto& v : hull) got.insert({std::lround(v.x), std::lround(v.y)});
  EXPECT_EQ(got, expected);
  EXPECT_NO_THROW(layout.validate());
}

TEST(HullArea, HexagonalAgainstClosedFormAndBruteForce) {
  const auto layout = build_hexagonal_layout(60.0);
  const double closed = 1.5 * std::sqrt(3.0) * 180.0 * 180.0;
  EXPECT_NEAR(convex_hull_area(layout), closed, 1e-6);
  EXPECT_NEAR(convex_hull_area(layout), brute_force_hull_area(positions(layout)), 1e-6);
  EXPECT_NEAR(closed, 84178.0, 1.0);
}

TEST(HullArea, OrthogonalAgainstShoelaceAndBruteForce) {
  const auto layout = build_orthogonal_layout(60.0);
  EXPECT_NEAR(convex_hull_area(layout), 28.0 * 3600.0, 1e-6);
  EXPECT_NEAR(convex_hull_area(layout), brute_force_hull_area(positions(layout)), 1e-6);
}

TEST(HullArea, RatioNearSeventeenPercent) {
  const double ratio = convex_hull_area(build_orthogonal_layout(60.0)) / convex_hull_area(build_hexagonal_layout(60.0));
  EXPECT_GE(ratio, 1.10);
  EXPECT_LE(ratio, 1.30);
}

TEST(HullArea, FootprintDilation) {
  const auto layout = build_orthogonal_layout(60.0);
  const auto hull = convex_hull(positions(layout));
  const double r = 12.5;
  EXPECT_NEAR(convex_hull_area(layout, r),
              polygon_area(hull) + polygon_perimeter(hull) * r + std::numbers::pi * r * r, 1e-6);
  EXPECT_THROW(convex_hull_area(layout, -1.0), DomainError);
}

TEST(HullArea, ScalesQuadratically) {
  for (auto kind : {LayoutKind::hexagonal, LayoutKind::orthogonal}) {
    const double a1 = convex_hull_area(build_layout(kind, 60.0));
    const double a2 = convex_hull_area(build_layout(kind, 150.0));
    EXPECT_NEAR(a2 / a1, 2.5 * 2.5, 1e-12);
  }
}

TEST(HullArea, CollinearPointsHaveZeroArea) {
  std::vector<Vec2> line;
  for (int i = 0; i < 5; ++i) line.push_back({i * 10.0, i * 5.0});
  const auto hull = convex_hull(line);
  EXPECT_EQ(polygon_area(hull), 0.0);
  EXPECT_LE(hull.size(), 2u);
}

TEST(DataRate, KnownValues) {
  EXPECT_NEAR(data_rate_gbps(37, 2448, 2048, 8, 23), 34.13, 0.01);
  EXPECT_NEAR(data_rate_gbps(1, 1, 1, 1, 1), 1e-9, 1e-21);
  EXPECT_NEAR(data_rate_gbps(37, 600, 400, 8, 170), 12.08, 0.01);
}

TEST(DataRate, LinearInEachArgument) {
  const double base = data_rate_gbps(37, 640, 480, 10, 30);
  EXPECT_NEAR(data_rate_gbps(74, 640, 480, 10, 30), 2 * base, 1e-12);
  EXPECT_NEAR(data_rate_gbps(37, 1920, 480, 10, 30), 3 * base, 1e-12);
  EXPECT_NEAR(data_rate_gbps(37, 640, 240, 10, 30), 0.5 * base, 1e-12);
  EXPECT_NEAR(data_rate_gbps(37, 640, 480, 12, 30), 1.2 * base, 1e-12);
  EXPECT_NEAR(data_rate_gbps(37, 640, 480, 10, 60), 2 * base, 1e-12);
  EXPECT_THROW(data_rate_gbps(0, 1, 1, 1, 1), DomainError);
}

TEST(Layouts, InvalidInputs) {
  EXPECT_THROW(build_hexagonal_layout(0.0), ConfigError);
  EXPECT_THROW(build_orthogonal_layout(-1.0), ConfigError);
  EXPECT_THROW(layout_kind_from_string("triangle"), ConfigError);
  EXPECT_EQ(layout_kind_from_string("hex"), LayoutKind::hexagonal);
  EXPECT_EQ(layout_kind_from_string("ortho"), LayoutKind::orthogonal);
}

TEST(Layouts, ValidateRejectsDegenerateLayouts) {
  // Every camera at the origin.
  std::vector<Vec2> pts(37, Vec2{0, 0});
  std::vector<int> bands(37);
  for (int i = 0; i < 37; ++i) bands[i] = i;
  EXPECT_THROW(make_layout(LayoutKind::hexagonal, 60.0, pts, bands).validate(), ConfigError);
  auto layout = build_hexagonal_layout(60.0);
  layout.poses.pop_back();
  EXPECT_THROW(layout.validate(), ConfigError);
}

TEST(Layouts, NearestNeighbours) {
  const auto hex = build_hexagonal_layout(60.0).nearest_neighbors(6);
  ASSERT_EQ(hex.size(), 6u);
  for (const auto& p : hex) EXPECT_NEAR(p.baseline_mm, 60.0, 1e-9);
  const auto ortho = build_orthogonal_layout(60.0).nearest_neighbors(6);
  int near = 0, diagonal = 0;
  for (const auto& p : ortho) {
    near += std::abs(p.baseline_mm - 60.0) < 1e-9;
    diagonal += std::abs(p.baseline_mm - 60.0 * std::sqrt(2.0)) < 1e-9;
  }
  EXPECT_EQ(near, 4);
  EXPECT_EQ(diagonal, 2);
}

TEST(Layouts, JsonRoundTrip) {
  for (auto kind : {LayoutKind::hexagonal, LayoutKind::orthogonal}) {
    const auto layout = build_layout(kind, 55.0);
    const auto back = layout_from_json(layout_to_json(layout));
    EXPECT_EQ(back.kind, layout.kind);
    EXPECT_EQ(back.spacing_mm, layout.spacing_mm);
    ASSERT_EQ(back.poses.size(), layout.poses.size());
    for (std::size_t i = 0; i < back.poses.size(); ++i) {
      EXPECT_EQ(back.poses[i].band, layout.poses[i].band);
      EXPECT_NEAR(back.poses[i].position.x, layout.poses[i].position.x, 1e-12);
      EXPECT_NEAR(back.poses[i].baseline_mm, layout.poses[i].baseline_mm, 1e-9);
    }
  }
  const auto path = std::filesystem::temp_directory_path() / "hexspec_layout_test.json";
  save_layout(path, build_hexagonal_layout(60.0));
  EXPECT_NO_THROW(load_layout(path).validate());
  std::filesystem::remove(path);
}
