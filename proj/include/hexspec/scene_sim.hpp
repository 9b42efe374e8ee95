#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hexspec/array_model.hpp"
#include "hexspec/image.hpp"
#include "hexspec/spectral.hpp"

namespace hexspec {

/// Procedural spectral texture: one reflectance image per band, periodic in
/// both axes so it can be sampled with wrap-around.
struct Texture {
  int width = 0;
  int height = 0;
  std::vector<Image> reflectance;  // one per band

  /// Bilinear sample of band c with periodic wrap.
  float sample(int band, double x, double y) const;
};

struct TextureSpec {
  std::uint64_t seed = 0;
  int width = 128;
  int height = 128;
  /// 1 = full-contrast spatial modulation, 0 = spatially uniform material.
  double contrast = 1.0;
  /// Highest spatial frequency of the modulation, cycles per texel.
  double detail = 0.2;
};

Texture generate_texture(const TextureSpec& spec, const BandPlan& plan);
Texture generate_texture(std::uint64_t seed, int width, int height, const BandPlan& plan);

struct Rect {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Fronto-parallel textured plane. The background layer has no extent limit.
struct Layer {
  double depth_mm = 1000.0;
  int texture = 0;
  Rect rect;
  Vec2 velocity;  // px per frame, in center-view coordinates
};

struct SceneSpec {
  std::string name = "scene";
  int width = 320;
  int height = 240;
  /// Focal length in pixels: a layer at depth Z seen over baseline b shifts by focal_px * b / Z.
  double focal_px = 400.0;
  double illuminant_k = 6400.0;
  BandPlan plan;
  std::vector<TextureSpec> textures;
  Layer background;
  std::vector<Layer> sprites;
  int frames = 1;
  std::uint64_t seed = 0;
  /// Standard deviation of additive Gaussian sensor noise on captures (0 = noiseless).
  double noise_sigma = 0.0;

  /// Throws ConfigError when depths, texture references or sizes are invalid.
  void validate() const;
  /// Additionally checks that every layer shifts by less than width/4 at the
  /// layout's largest baseline.
  void validate_for(const ArrayLayout& layout) const;
};

/// Random layered scene: textured background plus 2-4 sprites at nearer depths.
SceneSpec generate_scene(std::uint64_t seed, int width, int height, const BandPlan& plan = {});
/// Background-only scene at constant disparity (px at a 60 mm baseline).
SceneSpec flat_scene(std::uint64_t seed, int width, int height, double disparity_px,
                     const BandPlan& plan = {});

struct GroundTruth {
  HyperCube cube;                 // center view, all bands
  Image disparity;                // px at the reference baseline
  std::vector<Mask> occlusion;    // per camera id, 1 = visible to that camera
};

struct ArrayCapture {
  std::vector<Image> views;  // per camera id, at the camera's band
  GroundTruth truth;
};

/// Renders a SceneSpec. Textures and illuminant are built once at construction;
/// all render calls are const and thread-safe.
class SceneRenderer {
 public:
  explicit SceneRenderer(SceneSpec scene);

  const SceneSpec& scene() const { return scene_; }
  const Illuminant& illuminant() const { return illuminant_; }
  const Texture& texture(int id) const { return textures_.at(static_cast<std::size_t>(id)); }

  /// Index into layers() of the frontmost layer seen at (x, y) by a camera at
  /// `baseline_mm` along `epipolar`, or -1 when nothing covers (never happens
  /// because the background is unbounded).
  int frontmost_layer(double x, double y, double baseline_mm, const Vec2& epipolar, int frame) const;
  /// Background first, then sprites; frontmost_layer walks them by depth.
  const std::vector<Layer>& layers() const { return layers_; }
  /// Pixel shift of a layer for a baseline.
  double layer_shift(int layer, double baseline_mm) const;

  Image render_view(const CameraPose& pose, int band, int frame) const;
  HyperCube render_center_cube(int frame) const;
  /// Frontmost-layer disparity at the center view, in px for `reference_baseline_mm`.
  Image ground_truth_disparity(int frame, double reference_baseline_mm) const;
  /// 1 where the center pixel's surface is also the frontmost surface at its
  /// reprojection in the peripheral view. Reprojections outside the image stay 1.
  Mask ground_truth_occlusion(const CameraPose& pose, int frame) const;

  ArrayCapture render_array_capture(const ArrayLayout& layout, int frame, int threads = 1) const;

 private:
  SceneSpec scene_;
  Illuminant illuminant_;
  std::vector<Texture> textures_;
  std::vector<Layer> layers_;
  std::vector<int> depth_order_;
};

Image render_view(const SceneSpec& scene, const CameraPose& pose, int band, int frame);
ArrayCapture render_array_capture(const SceneSpec& scene, const ArrayLayout& layout, int frame);

nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& j);
SceneSpec load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const SceneSpec& scene);

}  // namespace hexspec
