#include "hexspec/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hexspec/errors.hpp"
#include "hexspec/parallel.hpp"
#include "hexspec/random.hpp"

namespace hexspec {
namespace {

struct SpectralLobe {
  double center_nm;
  double sigma_nm;
  double weight;
};

// Periodic band-limited noise squashed through a sigmoid into (0, 1).
Image periodic_noise(Rng& rng, int width, int height, double max_frequency) {
  Image field(width, height, 0.0f);
  const int kx_max = static_cast<int>(std::floor(max_frequency * width));
  const int ky_max = static_cast<int>(std::floor(max_frequency * height));
  if (kx_max == 0 && ky_max == 0) {
    std::fill(field.pixels().begin(), field.pixels().end(), 0.5f);
    return field;
  }
  constexpr int kWaves = 32;
  std::vector<double> z(field.size(), 0.0);
  std::vector<double> row_phase(static_cast<std::size_t>(height));
  for (int w = 0; w < kWaves; ++w) {
    int kx = 0, ky = 0;
    double f = 0.0;
    do {
      kx = rng.integer(-kx_max, kx_max);
      ky = rng.integer(-ky_max, ky_max);
      f = std::hypot(static_cast<double>(kx) / width, static_cast<double>(ky) / height);
    } while (f == 0.0 || f > max_frequency);
    const double amplitude = 1.0 / (f * std::max(width, height));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int y = 0; y < height; ++y) {
      const double py = 2.0 * std::numbers::pi * ky * y / height + phase;
      for (int x = 0; x < width; ++x)
        z[static_cast<std::size_t>(y) * width + x] +=
            amplitude * std::cos(2.0 * std::numbers::pi * kx * x / width + py);
    }
  }
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(z.size()));
  auto px = field.pixels();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = sd > 0.0 ? (z[i] - mean) / sd : 0.0;
    px[i] = static_cast<float>(1.0 / (1.0 + std::exp(-2.5 * s)));
  }
  return field;
}

double wrap(double v, int period) {
  const double p = static_cast<double>(period);
  v = std::fmod(v, p);
  if (v < 0.0) v += p;
  // A tiny negative remainder rounds up to exactly p.
  return v >= p ? 0.0 : v;
}

bool inside(const Rect& r, double ox, double oy, double x, double y) {
  return x >= ox && y >= oy && x < ox + r.width && y < oy + r.height;
}

}  // namespace

float Texture::sample(int band, double x, double y) const {
  const Image& img = reflectance[static_cast<std::size_t>(band)];
  x = wrap(x, width);
  y = wrap(y, height);
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = x0 + 1 == width ? 0 : x0 + 1;
  const int y1 = y0 + 1 == height ? 0 : y0 + 1;
  const float ax = static_cast<float>(x - x0);
  const float ay = static_cast<float>(y - y0);
  const float top = img(x0, y0) * (1.0f - ax) + img(x1, y0) * ax;
  const float bottom = img(x0, y1) * (1.0f - ax) + img(x1, y1) * ax;
  return top * (1.0f - ay) + bottom * ay;
}

Texture generate_texture(const TextureSpec& spec, const BandPlan& plan) {
  if (spec.width <= 0 || spec.height <= 0) throw DimensionError("texture size must be positive");
  plan.validate();
  Rng rng(spec.seed);
  const int lobes = rng.integer(2, 4);
  std::vector<SpectralLobe> spectrum;
  // The first lobe is broad and mid-spectrum so the green bands always carry texture.
  spectrum.push_back({rng.uniform(480.0, 620.0), rng.uniform(60.0, 90.0), rng.uniform(0.6, 1.0)});
  for (int k = 1; k < lobes; ++k)
    spectrum.push_back({rng.uniform(380.0, 780.0), rng.uniform(30.0, 90.0), rng.uniform(0.3, 1.0)});
  constexpr double kFloor = 0.05;
  constexpr double kLobeBudget = 0.9;
  double total = 0.0;
  for (const auto& l : spectrum) total += l.weight;
  for (auto& l : spectrum) l.weight *= kLobeBudget / total;

  // Material abundances vary slowly; a shared shading field carries the fine
  // structure common to all bands.
  const double contrast = std::clamp(spec.contrast, 0.0, 1.0);
  std::vector<Image> fields;
  for (int k = 0; k < lobes; ++k) {
    Image f = periodic_noise(rng, spec.width, spec.height, 0.5 * spec.detail);
    for (float& v : f.pixels()) v = static_cast<float>(0.5 + contrast * (v - 0.5));
    fields.push_back(std::move(f));
  }
  Image shading = periodic_noise(rng, spec.width, spec.height, spec.detail);
  for (float& v : shading.pixels()) v = static_cast<float>(1.0 - contrast * 0.7 * (1.0 - v));

  Texture tex{spec.width, spec.height, {}};
  tex.reflectance.reserve(static_cast<std::size_t>(plan.count));
  for (int c = 0; c < plan.count; ++c) {
    const double lambda = plan.center(c);
    Image band(spec.width, spec.height, static_cast<float>(kFloor));
    for (int k = 0; k < lobes; ++k) {
      const auto& l = spectrum[static_cast<std::size_t>(k)];
      const double d = (lambda - l.center_nm) / l.sigma_nm;
      const auto g = static_cast<float>(l.weight * std::exp(-0.5 * d * d));
      auto dst = band.pixels();
      const auto src = fields[static_cast<std::size_t>(k)].pixels();
      const auto shade = shading.pixels();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g * src[i] * shade[i];
    }
    for (float& v : band.pixels()) v = std::clamp(v, 0.0f, 1.0f);
    tex.reflectance.push_back(std::move(band));
  }
  return tex;
}

Texture generate_texture(std::uint64_t seed, int width, int height, const BandPlan& plan) {
  return generate_texture(TextureSpec{seed, width, height}, plan);
}

void SceneSpec::validate() const {
  plan.validate();
  if (width <= 0 || height <= 0) throw ConfigError("scene size must be positive");
  if (!(focal_px > 0.0)) throw ConfigError("focal length must be positive");
  if (!(illuminant_k > 0.0)) throw ConfigError("illuminant temperature must be positive");
  if (frames < 1) throw ConfigError("scene needs at least one frame");
  if (noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
  auto check_texture = [&](int id) {
    if (id < 0 || id >= static_cast<int>(textures.size()))
      throw ConfigError(fmt::format("scene '{}' references missing texture {}", name, id));
  };
  if (!(background.depth_mm > 0.0)) throw ConfigError("background depth must be positive");
  check_texture(background.texture);
  for (const auto& s : sprites) {
    check_texture(s.texture);
    if (!(s.depth_mm > 0.0) || s.depth_mm >= background.depth_mm)
      throw ConfigError(fmt::format("sprite depth {} must lie in (0, {})", s.depth_mm,
                                    background.depth_mm));
    if (!(s.rect.width > 0.0) || !(s.rect.height > 0.0))
      throw ConfigError("sprite extent must be positive");
  }
}

void SceneSpec::validate_for(const ArrayLayout& layout) const {
  validate();
  double nearest = background.depth_mm;
  for (const auto& s : sprites) nearest = std::min(nearest, s.depth_mm);
  const double shift = focal_px * layout.max_baseline() / nearest;
  if (shift >= width / 4.0)
    throw ConfigError(fmt::format("scene '{}' shifts {:.2f} px at the largest baseline, limit is {:.2f}",
                                  name, shift, width / 4.0));
}

SceneSpec generate_scene(std::uint64_t seed, int width, int height, const BandPlan& plan) {
  Rng rng(seed);
  SceneSpec s;
  s.name = fmt::format("gen{}", seed);
  s.width = width;
  s.height = height;
  s.focal_px = 1.25 * width;
  s.plan = plan;
  s.seed = seed;
  s.frames = 3;
  s.illuminant_k = rng.uniform() < 0.6 ? 6400.0 : 3200.0;
  constexpr double kReferenceBaseline = 60.0;
  auto depth_for = [&](double disparity) { return s.focal_px * kReferenceBaseline / disparity; };
  auto add_texture = [&](double contrast) {
    s.textures.push_back({Rng::derive(seed, s.textures.size() + 1), 128, 128, contrast,
                          rng.uniform(0.12, 0.25)});
    return static_cast<int>(s.textures.size()) - 1;
  };
  const double bg_disparity = rng.uniform(5.0, 8.0);
  s.background = {depth_for(bg_disparity), add_texture(rng.uniform(0.6, 1.0)), {}, {}};
  const int sprites = rng.integer(2, 4);
  for (int i = 0; i < sprites; ++i) {
    Layer l;
    l.depth_mm = depth_for(rng.uniform(bg_disparity + 2.5, 13.0));
    l.texture = add_texture(rng.uniform() < 0.2 ? 0.1 : rng.uniform(0.6, 1.0));
    l.rect.width = std::round(rng.uniform(0.15, 0.35) * width);
    l.rect.height = std::round(rng.uniform(0.2, 0.45) * height);
    l.rect.x = std::round(rng.uniform(0.1 * width, 0.9 * width - l.rect.width));
    l.rect.y = std::round(rng.uniform(0.1 * height, 0.9 * height - l.rect.height));
    l.velocity = {rng.uniform(-1.5, 1.5), rng.uniform(-1.0, 1.0)};
    s.sprites.push_back(l);
  }
  return s;
}

SceneSpec flat_scene(std::uint64_t seed, int width, int height, double disparity_px,
                     const BandPlan& plan) {
  if (!(disparity_px > 0.0)) throw DomainError("flat scene needs a positive disparity");
  SceneSpec s;
  s.name = fmt::format("flat{}", seed);
  s.width = width;
  s.height = height;
  s.focal_px = 1.25 * width;
  s.plan = plan;
  s.seed = seed;
  s.textures.push_back({Rng::derive(seed, 1), 128, 128, 0.8, 0.18});
  s.background = {s.focal_px * 60.0 / disparity_px, 0, {}, {}};
  return s;
}

SceneRenderer::SceneRenderer(SceneSpec scene) : scene_(std::move(scene)) {
  scene_.validate();
  illuminant_ = planck_illuminant(scene_.illuminant_k, scene_.plan);
  for (const auto& t : scene_.textures) textures_.push_back(generate_texture(t, scene_.plan));
  layers_.push_back(scene_.background);
  layers_.insert(layers_.end(), scene_.sprites.begin(), scene_.sprites.end());
  depth_order_.resize(layers_.size());
  std::iota(depth_order_.begin(), depth_order_.end(), 0);
  std::stable_sort(depth_order_.begin(), depth_order_.end(), [&](int a, int b) {
    return layers_[static_cast<std::size_t>(a)].depth_mm < layers_[static_cast<std::size_t>(b)].depth_mm;
  });
}

double SceneRenderer::layer_shift(int layer, double baseline_mm) const {
  return scene_.focal_px * baseline_mm / layers_[static_cast<std::size_t>(layer)].depth_mm;
}

int SceneRenderer::frontmost_layer(double x, double y, double baseline_mm, const Vec2& epipolar,
                                   int frame) const {
  for (int id : depth_order_) {
    const Layer& l = layers_[static_cast<std::size_t>(id)];
    if (id == 0) return 0;
    const double s = layer_shift(id, baseline_mm);
    const double px = x + s * epipolar.x;
    const double py = y + s * epipolar.y;
    if (inside(l.rect, l.rect.x + l.velocity.x * frame, l.rect.y + l.velocity.y * frame, px, py))
      return id;
  }
  return -1;
}

Image SceneRenderer::render_view(const CameraPose& pose, int band, int frame) const {
  if (band < 0 || band >= scene_.plan.count)
    throw DomainError(fmt::format("band {} outside plan with {} bands", band, scene_.plan.count));
  const auto power = static_cast<float>(illuminant_.power[static_cast<std::size_t>(band)]);
  Image out(scene_.width, scene_.height);
  for (int y = 0; y < scene_.height; ++y) {
    for (int x = 0; x < scene_.width; ++x) {
      const int id = frontmost_layer(x, y, pose.baseline_mm, pose.epipolar, frame);
      const Layer& l = layers_[static_cast<std::size_t>(id)];
      const double s = layer_shift(id, pose.baseline_mm);
      const double px = x + s * pose.epipolar.x;
      const double py = y + s * pose.epipolar.y;
      // Background texel coordinates are plane coordinates; sprites carry their texture along.
      const double ox = (id == 0 ? 0.0 : l.rect.x) + l.velocity.x * frame;
      const double oy = (id == 0 ? 0.0 : l.rect.y) + l.velocity.y * frame;
      out(x, y) = power * texture(l.texture).sample(band, px - ox, py - oy);
    }
  }
  return out;
}

HyperCube SceneRenderer::render_center_cube(int frame) const {
  const CameraPose center{};
  std::vector<Image> bands;
  bands.reserve(static_cast<std::size_t>(scene_.plan.count));
  for (int c = 0; c < scene_.plan.count; ++c) bands.push_back(render_view(center, c, frame));
  return HyperCube(std::move(bands));
}

Image SceneRenderer::ground_truth_disparity(int frame, double reference_baseline_mm) const {
  Image out(scene_.width, scene_.height);
  for (int y = 0; y < scene_.height; ++y)
    for (int x = 0; x < scene_.width; ++x)
      out(x, y) = static_cast<float>(
          layer_shift(frontmost_layer(x, y, 0.0, {}, frame), reference_baseline_mm));
  return out;
}

Mask SceneRenderer::ground_truth_occlusion(const CameraPose& pose, int frame) const {
  Mask mask(scene_.width, scene_.height, 1);
  if (pose.is_center()) return mask;
  for (int y = 0; y < scene_.height; ++y) {
    for (int x = 0; x < scene_.width; ++x) {
      const int id = frontmost_layer(x, y, 0.0, {}, frame);
      const double s = layer_shift(id, pose.baseline_mm);
      const double qx = x - s * pose.epipolar.x;
      const double qy = y - s * pose.epipolar.y;
      if (qx < 0.0 || qy < 0.0 || qx > scene_.width - 1 || qy > scene_.height - 1) continue;
      // Occluded iff a nearer layer covers the reprojected location in the peripheral view.
      const double depth = layers_[static_cast<std::size_t>(id)].depth_mm;
      for (int other : depth_order_) {
        const Layer& l = layers_[static_cast<std::size_t>(other)];
        if (other == id || l.depth_mm >= depth || other == 0) continue;
        const double so = layer_shift(other, pose.baseline_mm);
        if (inside(l.rect, l.rect.x + l.velocity.x * frame, l.rect.y + l.velocity.y * frame,
                   qx + so * pose.epipolar.x, qy + so * pose.epipolar.y)) {
          mask(x, y) = 0;
          break;
        }
      }
    }
  }
  return mask;
}

ArrayCapture SceneRenderer::render_array_capture(const ArrayLayout& layout, int frame,
                                                 int threads) const {
  scene_.validate_for(layout);
  ArrayCapture cap;
  cap.views.resize(layout.poses.size());
  cap.truth.occlusion.resize(layout.poses.size());
  parallel_for(layout.poses.size(), threads, [&](std::size_t i) {
    const CameraPose& pose = layout.poses[i];
    Image view = render_view(pose, pose.band, frame);
    if (scene_.noise_sigma > 0.0) {
      Rng rng(Rng::derive(scene_.seed, static_cast<std::uint64_t>(frame) * 1009u + i));
      for (float& v : view.pixels())
        v = std::clamp(static_cast<float>(v + scene_.noise_sigma * rng.normal()), 0.0f, 1.0f);
    }
    cap.views[i] = std::move(view);
    cap.truth.occlusion[i] = ground_truth_occlusion(pose, frame);
  });
  cap.truth.cube = render_center_cube(frame);
  cap.truth.disparity = ground_truth_disparity(frame, layout.spacing_mm);
  return cap;
}

Image render_view(const SceneSpec& scene, const CameraPose& pose, int band, int frame) {
  return SceneRenderer(scene).render_view(pose, band, frame);
}

ArrayCapture render_array_capture(const SceneSpec& scene, const ArrayLayout& layout, int frame) {
  return SceneRenderer(scene).render_array_capture(layout, frame);
}

namespace {

nlohmann::json layer_to_json(const Layer& l, bool with_rect) {
  nlohmann::json j{{"depth_mm", l.depth_mm},
                   {"texture", l.texture},
                   {"velocity", {l.velocity.x, l.velocity.y}}};
  if (with_rect) j["rect"] = {l.rect.x, l.rect.y, l.rect.width, l.rect.height};
  return j;
}

Layer layer_from_json(const nlohmann::json& j, bool with_rect) {
  Layer l;
  l.depth_mm = j.at("depth_mm").get<double>();
  l.texture = j.at("texture").get<int>();
  if (j.contains("velocity")) {
    const auto v = j.at("velocity").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("velocity must have two components");
    l.velocity = {v[0], v[1]};
  }
  if (with_rect) {
    const auto r = j.at("rect").get<std::vector<double>>();
    if (r.size() != 4) throw ConfigError("rect must be [x, y, width, height]");
    l.rect = {r[0], r[1], r[2], r[3]};
  }
  return l;
}

}  // namespace

nlohmann::json scene_to_json(const SceneSpec& s) {
  nlohmann::json textures = nlohmann::json::array();
  for (const auto& t : s.textures)
    textures.push_back({{"seed", t.seed},
                        {"width", t.width},
                        {"height", t.height},
                        {"contrast", t.contrast},
                        {"detail", t.detail}});
  nlohmann::json sprites = nlohmann::json::array();
  for (const auto& l : s.sprites) sprites.push_back(layer_to_json(l, true));
  return {{"name", s.name},
          {"width", s.width},
          {"height", s.height},
          {"focal_px", s.focal_px},
          {"illuminant_k", s.illuminant_k},
          {"bands", {{"count", s.plan.count},
                     {"start_nm", s.plan.start_nm},
                     {"step_nm", s.plan.step_nm},
                     {"bandwidth_nm", s.plan.bandwidth_nm}}},
          {"textures", textures},
          {"background", layer_to_json(s.background, false)},
          {"sprites", sprites},
          {"frames", s.frames},
          {"seed", s.seed},
          {"noise_sigma", s.noise_sigma}};
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  try {
    SceneSpec s;
    s.name = j.value("name", s.name);
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.focal_px = j.at("focal_px").get<double>();
    s.illuminant_k = j.value("illuminant_k", s.illuminant_k);
    if (j.contains("bands")) {
      const auto& b = j.at("bands");
      s.plan.count = b.value("count", s.plan.count);
      s.plan.start_nm = b.value("start_nm", s.plan.start_nm);
      s.plan.step_nm = b.value("step_nm", s.plan.step_nm);
      s.plan.bandwidth_nm = b.value("bandwidth_nm", s.plan.bandwidth_nm);
    }
    for (const auto& t : j.at("textures")) {
      TextureSpec ts;
      ts.seed = t.at("seed").get<std::uint64_t>();
      ts.width = t.value("width", ts.width);
      ts.height = t.value("height", ts.height);
      ts.contrast = t.value("contrast", ts.contrast);
      ts.detail = t.value("detail", ts.detail);
      s.textures.push_back(ts);
    }
    s.background = layer_from_json(j.at("background"), false);
    if (j.contains("sprites"))
      for (const auto& l : j.at("sprites")) s.sprites.push_back(layer_from_json(l, true));
    s.frames = j.value("frames", s.frames);
    s.seed = j.value("seed", s.seed);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("invalid scene description: {}", e.what()));
  }
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  try {
    return scene_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void save_scene(const std::filesystem::path& path, const SceneSpec& scene) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << scene_to_json(scene).dump(2) << '\n';
}

}  // namespace hexspec
