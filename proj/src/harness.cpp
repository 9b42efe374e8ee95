#include "hexspec/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hexspec/errors.hpp"
#include "hexspec/image_io.hpp"

namespace hexspec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::pair<Method, const char*>, 6> kMethodNames{{
    {Method::array_register, "array-register"},
    {Method::msfa_wbi, "msfa-wbi"},
    {Method::msfa_sd, "msfa-sd"},
    {Method::msfa_isd, "msfa-isd"},
    {Method::msfa_dwt, "msfa-dwt"},
    {Method::cassi_gap, "cassi-gap"},
}};

constexpr int kMosaicBands = 36;

bool is_msfa(Method m) {
  return m == Method::msfa_wbi || m == Method::msfa_sd || m == Method::msfa_isd ||
         m == Method::msfa_dwt;
}

template <typename T>
void read_if(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

SceneSpec resolve_scene(const json& entry, int width, int height, const fs::path& base_dir) {
  if (entry.is_number_integer()) return generate_scene(entry.get<std::uint64_t>(), width, height);
  if (entry.is_string()) {
    fs::path p = entry.get<std::string>();
    return load_scene(p.is_relative() ? base_dir / p : p);
  }
  if (!entry.is_object()) throw ConfigError("scene entries must be seeds, file paths or objects");
  if (entry.contains("file")) {
    fs::path p = entry.at("file").get<std::string>();
    return load_scene(p.is_relative() ? base_dir / p : p);
  }
  if (entry.contains("flat_disparity")) {
    return flat_scene(entry.value("seed", std::uint64_t{1}), width, height,
                      entry.at("flat_disparity").get<double>());
  }
  if (entry.contains("background")) return scene_from_json(entry);
  if (entry.contains("seed")) return generate_scene(entry.at("seed").get<std::uint64_t>(), width, height);
  throw ConfigError("scene object needs one of: seed, file, flat_disparity, background");
}

json registration_to_json(const RegistrationParams& p) {
  return {{"max_disparity", p.disparity.max_disparity},
          {"disparity_step", p.disparity.step},
          {"census_width", p.disparity.census_width},
          {"census_height", p.disparity.census_height},
          {"aggregation_radius", p.disparity.aggregation_radius},
          {"confidence_threshold", p.disparity.confidence_threshold},
          {"neighbor_count", p.disparity.neighbor_count},
          {"dilation_radius", p.occlusion.dilation_radius},
          {"occlusion_tolerance", p.occlusion.depth_tolerance},
          {"window", p.reconstruction.window},
          {"min_valid", p.reconstruction.min_valid},
          {"regularization", p.reconstruction.regularization},
          {"support_tolerance", p.reconstruction.depth_tolerance}};
}

void registration_from_json(const json& j, RegistrationParams& p) {
  read_if(j, "max_disparity", p.disparity.max_disparity);
  read_if(j, "disparity_step", p.disparity.step);
  read_if(j, "census_width", p.disparity.census_width);
  read_if(j, "census_height", p.disparity.census_height);
  read_if(j, "aggregation_radius", p.disparity.aggregation_radius);
  read_if(j, "confidence_threshold", p.disparity.confidence_threshold);
  read_if(j, "neighbor_count", p.disparity.neighbor_count);
  read_if(j, "dilation_radius", p.occlusion.dilation_radius);
  read_if(j, "occlusion_tolerance", p.occlusion.depth_tolerance);
  read_if(j, "window", p.reconstruction.window);
  read_if(j, "min_valid", p.reconstruction.min_valid);
  read_if(j, "regularization", p.reconstruction.regularization);
  read_if(j, "support_tolerance", p.reconstruction.depth_tolerance);
}

std::string format_psnr(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.4f}", v);
}

json score_value(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

// Stage timer; totals are kept in first-use order.
class Stopwatch {
 public:
  template <typename Fn>
  auto time(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      Stopwatch* self;
      const std::string& stage;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        self->add(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      }
    } record{this, stage, start};
    return fn();
  }

  std::vector<StageTiming> totals() const { return totals_; }

 private:
  void add(const std::string& stage, double seconds) {
    auto it = std::find_if(totals_.begin(), totals_.end(),
                           [&](const StageTiming& t) { return t.stage == stage; });
    if (it == totals_.end()) {
      totals_.push_back({stage, seconds, 1});
    } else {
      it->seconds += seconds;
      ++it->calls;
    }
  }

  std::vector<StageTiming> totals_;
};

// Frame scores of one scene, kept per method label in first-scored order.
class SceneScores {
 public:
  explicit SceneScores(int border) : border_(border) {}

  void score(const std::string& label, const HyperCube& estimate, const HyperCube& truth) {
    if (failed_.contains(label)) return;
    auto& s = entry(label);
    s.psnr[0] += psnr(estimate, truth);
    s.ssim[0] += ssim(estimate, truth);
    const HyperCube e = crop_intersection(estimate, border_);
    const HyperCube t = crop_intersection(truth, border_);
    s.psnr[1] += psnr(e, t);
    s.ssim[1] += ssim(e, t);
    ++s.frames;
  }

  void fail(const std::string& label) { failed_.insert(label); }

  void emit(const std::string& scene, std::vector<QualityScore>& out) const {
    for (const auto& label : order_) {
      if (failed_.contains(label)) continue;
      const auto& s = sums_.at(label);
      for (int r = 0; r < 2; ++r) {
        out.push_back({scene, label, r == 0 ? Region::full : Region::intersected, s.psnr[r] / s.frames,
                       s.ssim[r] / s.frames});
      }
    }
  }

 private:
  struct Sums {
    std::array<double, 2> psnr{};
    std::array<double, 2> ssim{};
    int frames = 0;
  };

  Sums& entry(const std::string& label) {
    auto [it, inserted] = sums_.try_emplace(label);
    if (inserted) order_.push_back(label);
    return it->second;
  }

  int border_;
  std::vector<std::string> order_;
  std::map<std::string, Sums> sums_;
  std::set<std::string> failed_;
};

RegistrationParams threaded(RegistrationParams p, int threads) {
  p.threads = threads;
  p.disparity.threads = threads;
  return p;
}

Image visible_fraction(const std::vector<Mask>& visibility, int center_id) {
  const Mask& first = visibility.front();
  Image out(first.width(), first.height());
  float peripherals = 0.0f;
  for (std::size_t id = 0; id < visibility.size(); ++id) {
    if (static_cast<int>(id) == center_id) continue;
    peripherals += 1.0f;
    const auto cells = visibility[id].cells();
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] += cells[i] ? 1.0f : 0.0f;
  }
  for (float& v : out.pixels()) v /= peripherals;
  return out;
}

class PreviewWriter {
 public:
  PreviewWriter(const BenchmarkConfig& config, const std::string& scene)
      : enabled_(config.previews), dir_(config.output_dir / "previews" / scene) {}

  template <typename Fn>
  void operator()(const std::string& name, Fn&& write) {
    if (!enabled_) return;
    fs::create_directories(dir_);
    write(dir_ / (name + ".png"));
  }

 private:
  bool enabled_;
  fs::path dir_;
};

struct RunContext {
  const BenchmarkConfig& config;
  QualityReport report;
  Stopwatch clock;
  std::optional<Mask> coded_aperture;
  int border = 0;
};

void record_failure(RunContext& ctx, SceneScores& scores, const std::string& scene,
                    const std::string& stage, const std::exception& e) {
  ctx.report.failures.push_back({scene, stage, e.what()});
  scores.fail(stage);
}

void run_snapshot_methods(RunContext& ctx, SceneScores& scores, const SceneSpec& spec,
                          const HyperCube& truth, int frame, PreviewWriter& preview) {
  const auto& config = ctx.config;
  BandPlan mosaic_plan = spec.plan;
  mosaic_plan.count = kMosaicBands;
  for (Method m : config.methods) {
    if (m == Method::array_register) continue;
    const std::string label = to_string(m);
    try {
      if (is_msfa(m)) {
        const HyperCube truth36 = truth.slice(0, kMosaicBands);
        const MosaicPattern pattern;
        const Image raw = mosaic(truth36, pattern);
        HyperCube out = ctx.clock.time(label, [&] {
          switch (m) {
            case Method::msfa_wbi: return demosaic_wbi(raw, pattern);
            case Method::msfa_sd: return demosaic_sd(raw, pattern);
            case Method::msfa_isd: return demosaic_isd(raw, pattern, config.isd_iterations);
            default: return demosaic_dwt(raw, pattern);
          }
        });
        ctx.clock.time("scoring", [&] { scores.score(label, out, truth36); });
        if (frame == 0)
          preview(label, [&](const fs::path& p) { write_png(p, render_rgb_preview(out, mosaic_plan)); });
      } else {
        if (!ctx.coded_aperture) {
          ctx.coded_aperture = ctx.clock.time("blue-noise-mask", [&] {
            return blue_noise_mask(truth.width(), truth.height(), config.mask_seed);
          });
        }
        const Mask& mask = *ctx.coded_aperture;
        if (mask.width() != truth.width() || mask.height() != truth.height())
          ctx.coded_aperture = blue_noise_mask(truth.width(), truth.height(), config.mask_seed);
        GapParams gap = config.gap;
        gap.threads = config.threads;
        HyperCube out = ctx.clock.time(label, [&] {
          const Image y = cassi_forward(truth, *ctx.coded_aperture);
          return gap_tv_reconstruct(y, *ctx.coded_aperture, truth.bands(), gap).cube;
        });
        ctx.clock.time("scoring", [&] { scores.score(label, out, truth); });
        if (frame == 0)
          preview(label, [&](const fs::path& p) { write_png(p, render_rgb_preview(out, spec.plan)); });
      }
    } catch (const std::exception& e) {
      record_failure(ctx, scores, spec.name, label, e);
    }
  }
}

void run_scene(RunContext& ctx, const SceneSpec& base, const std::vector<ArrayLayout>& layouts,
               bool ablation) {
  const auto& config = ctx.config;
  SceneSpec spec = base;
  if (config.frames > 0) spec.frames = config.frames;
  SceneScores scores(ctx.border);
  PreviewWriter preview(config, spec.name);

  std::unique_ptr<SceneRenderer> renderer;
  try {
    for (const auto& layout : layouts) spec.validate_for(layout);
    renderer = std::make_unique<SceneRenderer>(spec);
  } catch (const std::exception& e) {
    ctx.report.failures.push_back({spec.name, "render", e.what()});
    return;
  }

  const bool registering =
      ablation || std::find(config.methods.begin(), config.methods.end(), Method::array_register) !=
                      config.methods.end();
  const RegistrationParams params = threaded(config.registration, config.threads);

  for (int frame = 0; frame < spec.frames; ++frame) {
    std::optional<HyperCube> truth;
    if (registering) {
      for (const auto& layout : layouts) {
        const std::string label = ablation ? to_string(Method::array_register)
                                           : registration_label(config, layout.kind);
        ArrayCapture capture;
        try {
          capture = ctx.clock.time("render", [&] {
            return renderer->render_array_capture(layout, frame, config.threads);
          });
        } catch (const std::exception& e) {
          record_failure(ctx, scores, spec.name, "render", e);
          scores.fail(label);
          continue;
        }
        if (!truth) truth = capture.truth.cube;
        if (frame == 0) {
          preview("ground-truth", [&](const fs::path& p) {
            write_png(p, render_rgb_preview(capture.truth.cube, spec.plan));
          });
          preview("disparity-truth", [&](const fs::path& p) {
            write_png(p, normalize_for_display(capture.truth.disparity, 0.0f,
                                               static_cast<float>(params.disparity.max_disparity)));
          });
        }
        try {
          auto result = ctx.clock.time("array-register", [&] {
            return register_all(capture.views, layout, params);
          });
          ctx.clock.time("scoring", [&] { scores.score(label, result.cube, capture.truth.cube); });
          if (frame == 0) {
            const std::string suffix = layouts.size() > 1 ? "-" + to_string(layout.kind) : "";
            preview(label, [&](const fs::path& p) { write_png(p, render_rgb_preview(result.cube, spec.plan)); });
            preview("disparity" + suffix, [&](const fs::path& p) {
              write_png(p, normalize_for_display(result.disparity.disparity, 0.0f,
                                                 static_cast<float>(params.disparity.max_disparity)));
            });
            preview("visibility" + suffix, [&](const fs::path& p) {
              write_png(p, visible_fraction(result.visibility, layout.center().id));
            });
          }
        } catch (const std::exception& e) {
          record_failure(ctx, scores, spec.name, label, e);
        }
        if (ablation) {
          try {
            auto result = ctx.clock.time("array-register-gt-disparity", [&] {
              return register_with_disparity(capture.views, layout, capture.truth.disparity, params);
            });
            ctx.clock.time("scoring", [&] {
              scores.score(kGroundTruthDisparityLabel, result.cube, capture.truth.cube);
            });
          } catch (const std::exception& e) {
            record_failure(ctx, scores, spec.name, kGroundTruthDisparityLabel, e);
          }
          break;  // ablation uses the first layout only
        }
      }
    }
    if (ablation) continue;
    if (!truth) {
      try {
        truth = ctx.clock.time("render", [&] { return renderer->render_center_cube(frame); });
      } catch (const std::exception& e) {
        ctx.report.failures.push_back({spec.name, "render", e.what()});
        break;
      }
      if (frame == 0)
        preview("ground-truth", [&](const fs::path& p) { write_png(p, render_rgb_preview(*truth, spec.plan)); });
    }
    run_snapshot_methods(ctx, scores, spec, *truth, frame, preview);
  }
  scores.emit(spec.name, ctx.report.scores);
}

QualityReport run(const BenchmarkConfig& config, bool ablation) {
  config.validate();
  RunContext ctx{config, {}, {}, {}, 0};
  std::vector<ArrayLayout> layouts;
  for (LayoutKind kind : config.layouts) layouts.push_back(build_layout(kind, config.spacing_mm));
  ctx.border = intersection_border(config.scenes.front().width);

  for (const auto& scene : config.scenes) run_scene(ctx, scene, layouts, ablation);

  QualityReport report = std::move(ctx.report);
  report.averages = average_scores(report.scores);
  report.timings = ctx.clock.totals();
  report.parameters = config_to_json(config);
  report.parameters["mode"] = ablation ? "ablate-disparity" : "run";
  report.parameters["intersection_border_px"] = ctx.border;
  const SsimParams ssim_params;
  report.parameters["ssim"] = {{"window", ssim_params.window},
                               {"sigma", ssim_params.sigma},
                               {"g1", ssim_params.g1()},
                               {"g2", ssim_params.g2()},
                               {"pooling", "mean over valid windows and bands"}};
  report.parameters["psnr_peak"] = 1.0;
  report.parameters["frame_averaging"] = "mean over frames, then mean over scenes";
  return report;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.flush();
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace

std::string to_string(Method method) {
  for (const auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

Method method_from_string(const std::string& text) {
  for (const auto& [m, name] : kMethodNames)
    if (text == name) return m;
  throw ConfigError(fmt::format("unknown method '{}'", text));
}

void BenchmarkConfig::validate() const {
  if (scenes.empty()) throw ConfigError("config lists no scenes");
  if (methods.empty()) throw ConfigError("config lists no methods");
  if (layouts.empty()) throw ConfigError("config lists no layouts");
  if (!(spacing_mm > 0.0)) throw ConfigError("layout spacing must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (frames < 0) throw ConfigError("frames must not be negative");
  if (isd_iterations < 0) throw ConfigError("isd_iterations must not be negative");
  if (output_dir.empty()) throw ConfigError("output directory is empty");
  std::set<std::string> names;
  for (const auto& s : scenes) {
    s.validate();
    if (s.width != scenes.front().width || s.height != scenes.front().height)
      throw ConfigError("all scenes must share one image size");
    if (!names.insert(s.name).second) throw ConfigError(fmt::format("duplicate scene name '{}'", s.name));
  }
  std::set<Method> seen;
  for (Method m : methods)
    if (!seen.insert(m).second) throw ConfigError(fmt::format("method '{}' listed twice", to_string(m)));
  std::set<LayoutKind> kinds(layouts.begin(), layouts.end());
  if (kinds.size() != layouts.size()) throw ConfigError("layout listed twice");
}

BenchmarkConfig config_from_json(const json& j, const fs::path& base_dir) {
  try {
    BenchmarkConfig c;
    const int width = j.value("width", 320);
    const int height = j.value("height", 240);
    if (!j.contains("scenes") || !j.at("scenes").is_array()) throw ConfigError("config needs a 'scenes' array");
    for (const auto& entry : j.at("scenes")) c.scenes.push_back(resolve_scene(entry, width, height, base_dir));
    if (j.contains("layouts")) {
      c.layouts.clear();
      for (const auto& k : j.at("layouts")) c.layouts.push_back(layout_kind_from_string(k.get<std::string>()));
    }
    read_if(j, "spacing_mm", c.spacing_mm);
    if (j.contains("methods")) {
      for (const auto& m : j.at("methods")) {
        const auto name = m.get<std::string>();
        if (name == "all") {
          for (const auto& [method, _] : kMethodNames) c.methods.push_back(method);
        } else {
          c.methods.push_back(method_from_string(name));
        }
      }
    }
    if (j.contains("registration")) registration_from_json(j.at("registration"), c.registration);
    if (j.contains("gap")) {
      const auto& g = j.at("gap");
      read_if(g, "iterations", c.gap.iterations);
      read_if(g, "tv_weight", c.gap.tv_weight);
      read_if(g, "tv_steps", c.gap.tv_steps);
    }
    read_if(j, "isd_iterations", c.isd_iterations);
    read_if(j, "mask_seed", c.mask_seed);
    read_if(j, "frames", c.frames);
    read_if(j, "threads", c.threads);
    read_if(j, "previews", c.previews);
    if (j.contains("output_dir")) {
      fs::path out = j.at("output_dir").get<std::string>();
      c.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad config: {}", e.what()));
  }
}

BenchmarkConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("'{}': {}", path.string(), e.what()));
  }
  // Paths inside the config are relative to the working directory, like the
  // config path itself.
  return config_from_json(j, {});
}

json config_to_json(const BenchmarkConfig& c) {
  json scenes = json::array();
  for (const auto& s : c.scenes) scenes.push_back(scene_to_json(s));
  json layouts = json::array();
  for (LayoutKind k : c.layouts) layouts.push_back(to_string(k));
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  return {{"scenes", scenes},
          {"layouts", layouts},
          {"spacing_mm", c.spacing_mm},
          {"methods", methods},
          {"registration", registration_to_json(c.registration)},
          {"gap", {{"iterations", c.gap.iterations}, {"tv_weight", c.gap.tv_weight}, {"tv_steps", c.gap.tv_steps}}},
          {"isd_iterations", c.isd_iterations},
          {"mask_seed", c.mask_seed},
          {"frames", c.frames},
          {"threads", c.threads},
          {"previews", c.previews},
          {"output_dir", c.output_dir.string()}};
}

const QualityScore* QualityReport::find(const std::string& scene, const std::string& method,
                                        Region region) const {
  for (const auto& s : scores)
    if (s.scene == scene && s.method == method && s.region == region) return &s;
  return nullptr;
}

const MethodAverage* QualityReport::average(const std::string& method, Region region) const {
  for (const auto& a : averages)
    if (a.method == method && a.region == region) return &a;
  return nullptr;
}

std::string registration_label(const BenchmarkConfig& config, LayoutKind kind) {
  const std::string base = to_string(Method::array_register);
  return config.layouts.size() > 1 ? base + "@" + to_string(kind) : base;
}

QualityReport run_benchmark(const BenchmarkConfig& config) { return run(config, false); }

QualityReport run_gt_disparity_ablation(const BenchmarkConfig& config) { return run(config, true); }

std::vector<MethodAverage> average_scores(const std::vector<QualityScore>& scores) {
  std::vector<MethodAverage> out;
  for (const auto& s : scores) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MethodAverage& a) {
      return a.method == s.method && a.region == s.region;
    });
    if (it == out.end()) {
      out.push_back({s.method, s.region, 0.0, 0.0, 0});
      it = out.end() - 1;
    }
    it->psnr_db += s.psnr_db;
    it->ssim += s.ssim;
    ++it->scenes;
  }
  for (auto& a : out) {
    a.psnr_db /= a.scenes;
    a.ssim /= a.scenes;
  }
  return out;
}

std::string report_csv(const QualityReport& report) {
  std::string out = "scene,method,region,psnr_db,ssim\n";
  for (const auto& s : report.scores) {
    out += fmt::format("{},{},{},{},{:.6f}\n", s.scene, s.method, to_string(s.region),
                       format_psnr(s.psnr_db), s.ssim);
  }
  return out;
}

json report_json(const QualityReport& report) {
  json rows = json::array();
  for (const auto& s : report.scores) {
    rows.push_back({{"scene", s.scene},
                    {"method", s.method},
                    {"region", to_string(s.region)},
                    {"psnr_db", score_value(s.psnr_db)},
                    {"ssim", s.ssim}});
  }
  json averages = json::array();
  for (const auto& a : report.averages) {
    averages.push_back({{"method", a.method},
                        {"region", to_string(a.region)},
                        {"psnr_db", score_value(a.psnr_db)},
                        {"ssim", a.ssim},
                        {"scenes", a.scenes}});
  }
  json timings = json::array();
  for (const auto& t : report.timings)
    timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}, {"calls", t.calls}});
  json failures = json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"scene", f.scene}, {"stage", f.stage}, {"message", f.message}});
  return {{"parameters", report.parameters},
          {"scores", rows},
          {"averages", averages},
          {"timings", timings},
          {"failures", failures}};
}

void emit_report(const QualityReport& report, const fs::path& dir, const ReportFormats& formats) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  if (formats.csv) write_text(dir / "scores.csv", report_csv(report));
  if (formats.json) write_text(dir / "report.json", report_json(report).dump(2) + "\n");
}

}  // namespace hexspec
