#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hexspec/array_model.hpp"
#include "hexspec/errors.hpp"
#include "hexspec/harness.hpp"
#include "hexspec/image_io.hpp"
#include "hexspec/scene_sim.hpp"

namespace fs = std::filesystem;
using namespace hexspec;

namespace {

void print_summary(const QualityReport& report) {
  for (const auto& a : report.averages) {
    fmt::print("{:<30} {:<12} psnr {:>8.3f} dB  ssim {:.4f}  ({} scenes)\n", a.method,
               to_string(a.region), a.psnr_db, a.ssim, a.scenes);
  }
  for (const auto& t : report.timings) fmt::print("  {:<28} {:8.2f} s  x{}\n", t.stage, t.seconds, t.calls);
  for (const auto& f : report.failures)
    fmt::print(stderr, "failed: scene {} stage {}: {}\n", f.scene, f.stage, f.message);
}

int run_and_report(const std::string& config_path, bool ablation, int threads) {
  BenchmarkConfig config = load_config(config_path);
  if (threads > 0) config.threads = threads;
  const QualityReport report = ablation ? run_gt_disparity_ablation(config) : run_benchmark(config);
  emit_report(report, config.output_dir);
  print_summary(report);
  fmt::print("wrote {}\n", (config.output_dir / "scores.csv").string());
  return report.ok() ? 0 : 2;
}

int print_layout(const std::string& kind_text, double baseline, double radius, double width,
                 double height, double bits, double fps) {
  const ArrayLayout layout = build_layout(layout_kind_from_string(kind_text), baseline);
  fmt::print("layout          {}\n", to_string(layout.kind));
  fmt::print("cameras         {}\n", layout.poses.size());
  fmt::print("spacing_mm      {:.3f}\n", layout.spacing_mm);
  fmt::print("max_baseline_mm {:.3f}\n", layout.max_baseline());
  fmt::print("hull_area_mm2   {:.3f}\n", convex_hull_area(layout, radius));
  fmt::print("data_rate_gbps  {:.3f}\n",
             data_rate_gbps(static_cast<double>(layout.poses.size()), width, height, bits, fps));
  return 0;
}

int render_scene(const std::string& scene_path, std::uint64_t seed, const std::string& out_dir,
                 const std::string& kind_text, double spacing, int threads) {
  const SceneSpec spec = scene_path.empty() ? generate_scene(seed, 320, 240) : load_scene(scene_path);
  const ArrayLayout layout = build_layout(layout_kind_from_string(kind_text), spacing);
  spec.validate_for(layout);
  const SceneRenderer renderer(spec);
  const fs::path root(out_dir);
  fs::create_directories(root);
  save_scene(root / "scene.json", spec);
  save_layout(root / "layout.json", layout);
  for (int frame = 0; frame < spec.frames; ++frame) {
    const fs::path dir = root / fmt::format("frame{:03d}", frame);
    fs::create_directories(dir / "views");
    fs::create_directories(dir / "visibility");
    const ArrayCapture capture = renderer.render_array_capture(layout, frame, threads);
    for (const auto& pose : layout.poses) {
      write_pgm(dir / "views" / fmt::format("cam{:02d}_band{:02d}.pgm", pose.id, pose.band),
                capture.views[static_cast<std::size_t>(pose.id)]);
      if (!pose.is_center())
        write_png(dir / "visibility" / fmt::format("cam{:02d}.png", pose.id),
                  capture.truth.occlusion[static_cast<std::size_t>(pose.id)]);
    }
    write_cube(dir / "truth.hsc", capture.truth.cube, spec.plan);
    write_png(dir / "truth.png", render_rgb_preview(capture.truth.cube, spec.plan));
    float max_d = 0.0f;
    for (float d : capture.truth.disparity.pixels()) max_d = std::max(max_d, d);
    write_png(dir / "disparity.png", normalize_for_display(capture.truth.disparity, 0.0f, max_d));
  }
  fmt::print("rendered {} frame(s) of '{}' to {}\n", spec.frames, spec.name, root.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral camera-array benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run all configured methods and write scores");
  run->add_option("--config", config_path, "JSON benchmark config")->required()->check(CLI::ExistingFile);
  run->add_option("--threads", threads, "Override the config's thread count");

  auto* ablate = app.add_subcommand("ablate-disparity", "Registration with estimated vs ground-truth disparity");
  ablate->add_option("--config", config_path, "JSON benchmark config")->required()->check(CLI::ExistingFile);
  ablate->add_option("--threads", threads, "Override the config's thread count");

  std::string kind = "hex";
  double baseline = 60.0, radius = 0.0, width = 2448, height = 2048, bits = 8, fps = 23;
  auto* layout = app.add_subcommand("layout", "Print array geometry and raw data rate");
  layout->add_option("--kind", kind, "hex or ortho")->check(CLI::IsMember({"hex", "hexagonal", "ortho", "orthogonal"}));
  layout->add_option("--baseline", baseline, "Camera spacing in mm")->check(CLI::PositiveNumber);
  layout->add_option("--camera-radius", radius, "Footprint radius added around the hull, mm");
  layout->add_option("--width", width, "Sensor width in px");
  layout->add_option("--height", height, "Sensor height in px");
  layout->add_option("--bits", bits, "Bits per pixel");
  layout->add_option("--fps", fps, "Frames per second");

  std::string scene_path, out_dir;
  std::uint64_t seed = 1;
  auto* render = app.add_subcommand("render", "Render a scene's array capture and ground truth");
  auto* scene_opt = render->add_option("--scene", scene_path, "Scene JSON file")->check(CLI::ExistingFile);
  render->add_option("--seed", seed, "Generate a 320x240 scene from this seed instead")->excludes(scene_opt);
  render->add_option("--out", out_dir, "Output directory")->required();
  render->add_option("--layout", kind, "hex or ortho")->check(CLI::IsMember({"hex", "hexagonal", "ortho", "orthogonal"}));
  render->add_option("--spacing", baseline, "Camera spacing in mm")->check(CLI::PositiveNumber);
  render->add_option("--threads", threads, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_and_report(config_path, false, threads);
    if (*ablate) return run_and_report(config_path, true, threads);
    if (*layout) return print_layout(kind, baseline, radius, width, height, bits, fps);
    if (*render) return render_scene(scene_path, seed, out_dir, kind, baseline, std::max(threads, 1));
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
