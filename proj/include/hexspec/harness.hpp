#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hexspec/array_model.hpp"
#include "hexspec/metrics.hpp"
#include "hexspec/registration.hpp"
#include "hexspec/scene_sim.hpp"
#include "hexspec/snapshot.hpp"

namespace hexspec {

enum class Method { array_register, msfa_wbi, msfa_sd, msfa_isd, msfa_dwt, cassi_gap };

/// Config spelling: array-register, msfa-wbi, msfa-sd, msfa-isd, msfa-dwt, cassi-gap.
std::string to_string(Method method);
Method method_from_string(const std::string& text);

struct BenchmarkConfig {
  /// Scenes are resolved at load time; generator seeds become full specs.
  std::vector<SceneSpec> scenes;
  std::vector<LayoutKind> layouts{LayoutKind::hexagonal};
  double spacing_mm = 60.0;
  std::vector<Method> methods;
  RegistrationParams registration;
  GapParams gap;
  int isd_iterations = 3;
  std::uint64_t mask_seed = 1;
  /// Overrides every scene's frame count when positive.
  int frames = 0;
  int threads = 1;
  bool previews = true;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError naming the first problem found.
  void validate() const;
};

/// Reads a JSON config. Relative scene file paths resolve against `base_dir`.
BenchmarkConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
BenchmarkConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const BenchmarkConfig& config);

struct MethodAverage {
  std::string method;
  Region region = Region::full;
  double psnr_db = 0.0;
  double ssim = 0.0;
  int scenes = 0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
  int calls = 0;
};

struct StageFailure {
  std::string scene;
  std::string stage;
  std::string message;
};

struct QualityReport {
  /// One row per scene, method and region; frame scores are averaged per scene.
  std::vector<QualityScore> scores;
  std::vector<MethodAverage> averages;
  std::vector<StageTiming> timings;
  std::vector<StageFailure> failures;
  nlohmann::json parameters;

  bool ok() const { return failures.empty(); }
  /// Row for (scene, method, region), or nullptr.
  const QualityScore* find(const std::string& scene, const std::string& method, Region region) const;
  const MethodAverage* average(const std::string& method, Region region) const;
};

/// Row label of array registration on a layout. Single-layout configs use the
/// plain method name; multi-layout configs append the layout kind.
std::string registration_label(const BenchmarkConfig& config, LayoutKind kind);
inline constexpr const char* kGroundTruthDisparityLabel = "array-register-gt-disparity";

/// Renders each scene, runs the configured methods and scores them against the
/// center-view ground truth on the full and intersected regions. Stage errors
/// are recorded and the run continues. Previews go to output_dir/previews.
QualityReport run_benchmark(const BenchmarkConfig& config);

/// Registration with estimated and with ground-truth disparity on the first
/// configured layout; emits paired rows.
QualityReport run_gt_disparity_ablation(const BenchmarkConfig& config);

/// Recomputes per-method averages from the rows (arithmetic mean over scenes).
std::vector<MethodAverage> average_scores(const std::vector<QualityScore>& scores);

std::string report_csv(const QualityReport& report);
nlohmann::json report_json(const QualityReport& report);

struct ReportFormats {
  bool csv = true;
  bool json = true;
};

/// Writes scores.csv and report.json under `dir`; throws IoError with the path on failure.
void emit_report(const QualityReport& report, const std::filesystem::path& dir,
                 const ReportFormats& formats = {});

}  // namespace hexspec
