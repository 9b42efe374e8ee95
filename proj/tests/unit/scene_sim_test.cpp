#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hexspec/errors.hpp"
#include "hexspec/scene_sim.hpp"
#include "test_support.hpp"

using namespace hexspec;

namespace {

// Two fronto-parallel layers with integer shifts at the 60 mm spacing:
// background 6 px, sprite 12 px.
SceneSpec two_layer_scene() {
  SceneSpec s;
  s.name = "two-layer";
  s.width = 160;
  s.height = 120;
  s.focal_px = 400.0;
  s.textures = {{11, 128, 128, 1.0, 0.2}, {12, 128, 128, 1.0, 0.2}};
  s.background = {4000.0, 0, {}, {}};
  Layer sprite;
  sprite.depth_mm = 2000.0;
  sprite.texture = 1;
  sprite.rect = {60, 40, 40, 30};
  s.sprites.push_back(sprite);
  return s;
}

SceneSpec single_plane_scene() {
  SceneSpec s = two_layer_scene();
  s.sprites.clear();
  return s;
}

const CameraPose& horizontal_neighbour(const ArrayLayout& layout) {
  for (const auto& p : layout.poses)
    if (std::abs(p.baseline_mm - layout.spacing_mm) < 1e-9 && std::abs(p.epipolar.y) < 1e-12 && p.epipolar.x > 0)
      return p;
  throw std::logic_error("layout has no +x neighbour");
}

}  // namespace

TEST(Texture, DeterministicAndBounded) {
  const BandPlan plan;
  const auto a = generate_texture(42, 64, 48, plan);
  const auto b = generate_texture(42, 64, 48, plan);
  ASSERT_EQ(a.reflectance.size(), 37u);
  for (int c = 0; c < 37; ++c) {
    EXPECT_EQ(a.reflectance[c], b.reflectance[c]);
    for (float v : a.reflectance[c].pixels()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  const auto other = generate_texture(43, 64, 48, plan);
  EXPECT_NE(other.reflectance[10], a.reflectance[10]);
}

TEST(Texture, SpectraAreSmooth) {
  const BandPlan plan;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto t = generate_texture(seed, 48, 48, plan);
    double worst = 0;
    for (int y = 0; y < t.height; ++y)
      for (int x = 0; x < t.width; ++x)
        for (int c = 0; c + 1 < 37; ++c)
          worst = std::max(worst, double(std::abs(t.reflectance[c + 1](x, y) - t.reflectance[c](x, y))));
    EXPECT_LE(worst, 0.25) << "seed " << seed;
  }
}

TEST(Texture, HasSpatialContrastAt550nm) {
  const BandPlan plan;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto t = generate_texture(seed, 128, 128, plan);
    const Image& band = t.reflectance[15];  // 550 nm
    double mean = 0, sq = 0;
    for (float v : band.pixels()) mean += v;
    mean /= band.size();
    for (float v : band.pixels()) sq += (v - mean) * (v - mean);
    EXPECT_GE(std::sqrt(sq / band.size()), 0.05) << "seed " << seed;
  }
}

TEST(Texture, PeriodicSampling) {
  const auto t = generate_texture(5, 32, 32, BandPlan{});
  EXPECT_FLOAT_EQ(t.sample(3, 1.25, 2.5), t.sample(3, 33.25, 2.5 - 64.0));
}

TEST(Render, CenterViewEqualsGroundTruthBand) {
  const SceneRenderer r(two_layer_scene());
  const auto layout = build_hexagonal_layout(60.0);
  const HyperCube truth = r.render_center_cube(0);
  for (int c : {0, 18, 36}) EXPECT_EQ(r.render_view(layout.center(), c, 0), truth.band(c));
}

TEST(Render, SinglePlaneIsATranslation) {
  const SceneRenderer r(single_plane_scene());
  const auto layout = build_hexagonal_layout(60.0);
  const CameraPose& pose = horizontal_neighbour(layout);
  const Image center = r.render_view(layout.center(), 20, 0);
  const Image side = r.render_view(pose, 20, 0);
  // Shift is 400 * 60 / 4000 = 6 px; brute-force reprojection on interior pixels.
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x + 6 < 160; ++x) ASSERT_FLOAT_EQ(side(x, y), center(x + 6, y)) << x << "," << y;
}

TEST(Render, PhotometricConsistencyAlongOblique) {
  const SceneRenderer r(single_plane_scene());
  const auto layout = build_hexagonal_layout(60.0);
  const Image center = r.render_view(layout.center(), 12, 0);
  for (const auto& pose : layout.nearest_neighbors(6)) {
    const Image side = r.render_view(pose, 12, 0);  // diagnostic same-band render
    const double s = r.layer_shift(0, pose.baseline_mm);
    double err = 0;
    int n = 0;
    for (int y = 10; y < 110; ++y)
      for (int x = 10; x < 150; ++x) {
        err += std::abs(side(x, y) - center.bilinear(x + s * pose.epipolar.x, y + s * pose.epipolar.y));
        ++n;
      }
    EXPECT_LE(err / n, 1e-3) << "camera " << pose.id;
  }
}

TEST(Render, SinglePlaneGroundTruth) {
  const SceneRenderer r(single_plane_scene());
  const auto layout = build_hexagonal_layout(60.0);
  const auto cap = r.render_array_capture(layout, 0);
  for (const auto& m : cap.truth.occlusion) EXPECT_EQ(m.count(), m.size());
  for (float d : cap.truth.disparity.pixels()) EXPECT_FLOAT_EQ(d, 6.0f);
  EXPECT_EQ(cap.views[static_cast<std::size_t>(layout.center().id)], cap.truth.cube.band(kCenterBand));
}

TEST(Render, OccludedStripeMatchesAnalyticWidth) {
  const SceneSpec scene = two_layer_scene();
  const SceneRenderer r(scene);
  const auto layout = build_hexagonal_layout(60.0);
  const CameraPose& pose = horizontal_neighbour(layout);
  const Mask m = r.ground_truth_occlusion(pose, 0);
  // Stripe width f*b*(1/Zf - 1/Zb) = 12 - 6 = 6 px over the sprite height 30.
  const double stripe = 400.0 * 60.0 * (1.0 / 2000.0 - 1.0 / 4000.0);
  const auto zeros = static_cast<double>(m.size() - m.count());
  EXPECT_NEAR(zeros, stripe * 30, 2 * 30);
  // Every occluded pixel is background just beside the sprite on one side.
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x)
      if (!m(x, y)) {
        EXPECT_GE(y, 40);
        EXPECT_LT(y, 70);
        EXPECT_TRUE((x >= 60 - 7 && x < 60) || (x >= 100 && x < 107)) << x;
      }
}

TEST(Render, OcclusionMatchesZBufferOracle) {
  // Brute-force peripheral z-buffer: label every peripheral pixel with the
  // frontmost layer, then a center pixel is visible iff the peripheral label at
  // its reprojection equals its own layer.
  const SceneSpec scene = two_layer_scene();
  const SceneRenderer r(scene);
  const auto layout = build_hexagonal_layout(60.0);
  for (const auto& pose : layout.nearest_neighbors(6)) {
    const Mask m = r.ground_truth_occlusion(pose, 0);
    const double sb = 400.0 * pose.baseline_mm / 4000.0;
    const double sf = 400.0 * pose.baseline_mm / 2000.0;
    auto in_sprite = [](double x, double y) { return x >= 60 && x < 100 && y >= 40 && y < 70; };
    int disagreements = 0;
    for (int y = 0; y < 120; ++y)
      for (int x = 0; x < 160; ++x) {
        const bool fg = in_sprite(x, y);
        const double s = fg ? sf : sb;
        const double qx = x - s * pose.epipolar.x, qy = y - s * pose.epipolar.y;
        if (qx < 0 || qy < 0 || qx > 159 || qy > 119) continue;
        const bool peripheral_fg = in_sprite(qx + sf * pose.epipolar.x, qy + sf * pose.epipolar.y);
        const bool visible = fg || !peripheral_fg;
        disagreements += visible != static_cast<bool>(m(x, y));
      }
    EXPECT_EQ(disagreements, 0) << "camera " << pose.id;
  }
}

TEST(Render, DeterministicAndBounded) {
  const SceneSpec scene = generate_scene(3, 200, 150);
  const auto layout = build_hexagonal_layout(60.0);
  const auto a = render_array_capture(scene, layout, 1);
  const auto b = SceneRenderer(scene).render_array_capture(layout, 1, 3);
  EXPECT_EQ(a.views, b.views);
  EXPECT_EQ(a.truth.cube, b.truth.cube);
  EXPECT_EQ(a.truth.occlusion, b.truth.occlusion);
  EXPECT_TRUE(a.truth.cube.normalized());
  for (const auto& v : a.views)
    for (float x : v.pixels()) {
      ASSERT_GE(x, 0.0f);
      ASSERT_LE(x, 1.0f);
    }
}

TEST(Render, DisparityIsFrontmostLayer) {
  const SceneRenderer r(two_layer_scene());
  const Image d = r.ground_truth_disparity(0, 60.0);
  EXPECT_FLOAT_EQ(d(70, 50), 12.0f);
  EXPECT_FLOAT_EQ(d(10, 10), 6.0f);
  EXPECT_FLOAT_EQ(d(59, 50), 6.0f);
}

TEST(Render, SpritesMoveWithVelocity) {
  SceneSpec s = two_layer_scene();
  s.sprites[0].velocity = {2.0, 1.0};
  s.frames = 3;
  const SceneRenderer r(s);
  const Image d0 = r.ground_truth_disparity(0, 60.0);
  const Image d2 = r.ground_truth_disparity(2, 60.0);
  EXPECT_FLOAT_EQ(d0(60, 40), 12.0f);
  EXPECT_FLOAT_EQ(d2(60, 40), 6.0f);
  EXPECT_FLOAT_EQ(d2(64, 42), 12.0f);
  const Image v0 = r.render_view(CameraPose{}, 5, 0);
  const Image v2 = r.render_view(CameraPose{}, 5, 2);
  EXPECT_FLOAT_EQ(v0(70, 50), v2(74, 52));
}

TEST(Render, BandOutOfRangeIsDomainError) {
  const SceneRenderer r(single_plane_scene());
  EXPECT_THROW(r.render_view(CameraPose{}, 37, 0), DomainError);
  EXPECT_THROW(r.render_view(CameraPose{}, -1, 0), DomainError);
}

TEST(Render, NoiseIsSeededAndBounded) {
  SceneSpec s = single_plane_scene();
  s.noise_sigma = 0.01;
  const auto layout = build_hexagonal_layout(60.0);
  const auto a = SceneRenderer(s).render_array_capture(layout, 0);
  const auto b = SceneRenderer(s).render_array_capture(layout, 0);
  EXPECT_EQ(a.views, b.views);
  EXPECT_NE(a.views[0], SceneRenderer(single_plane_scene()).render_array_capture(layout, 0).views[0]);
}

TEST(SceneSpec, Validation) {
  SceneSpec s = two_layer_scene();
  EXPECT_NO_THROW(s.validate());
  s.sprites[0].depth_mm = 5000.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = two_layer_scene();
  s.sprites[0].texture = 7;
  EXPECT_THROW(s.validate(), ConfigError);
  s = two_layer_scene();
  s.sprites[0].depth_mm = 500.0;  // 400*180/500 = 144 px > 160/4
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(s.validate_for(build_hexagonal_layout(60.0)), ConfigError);
}

TEST(SceneSpec, GeneratedScenesFitTheArrays) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SceneSpec s = generate_scene(seed, 320, 240);
    EXPECT_NO_THROW(s.validate_for(build_hexagonal_layout(60.0)));
    EXPECT_NO_THROW(s.validate_for(build_orthogonal_layout(60.0)));
    EXPECT_GE(s.sprites.size(), 2u);
    EXPECT_LE(s.sprites.size(), 4u);
  }
}

TEST(SceneSpec, JsonRoundTrip) {
  SceneSpec s = generate_scene(9, 200, 150);
  s.noise_sigma = 0.002;
  const SceneSpec back = scene_from_json(scene_to_json(s));
  EXPECT_EQ(scene_to_json(back), scene_to_json(s));
  const auto path = std::filesystem::temp_directory_path() / "hexspec_scene_test.json";
  save_scene(path, s);
  const SceneSpec loaded = load_scene(path);
  std::filesystem::remove(path);
  const auto layout = build_hexagonal_layout(60.0);
  EXPECT_EQ(SceneRenderer(loaded).render_view(layout.poses[3], 4, 0),
            SceneRenderer(s).render_view(layout.poses[3], 4, 0));
}

TEST(SceneSpec, FlatScene) {
  const SceneSpec s = flat_scene(4, 120, 90, 12.0);
  EXPECT_TRUE(s.sprites.empty());
  const SceneRenderer r(s);
  const Image d = r.ground_truth_disparity(0, 60.0);
  for (float v : d.pixels()) EXPECT_NEAR(v, 12.0f, 1e-4f);
  EXPECT_THROW(flat_scene(1, 10, 10, 0.0), DomainError);
}
