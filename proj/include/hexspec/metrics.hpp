#pragma once

#include <limits>
#include <string>

#include "hexspec/spectral.hpp"

namespace hexspec {

/// Mean squared error over all samples of two equally shaped cubes.
double mse(const HyperCube& estimate, const HyperCube& truth);

/// PSNR in dB; +infinity when the cubes are identical.
double psnr(const HyperCube& estimate, const HyperCube& truth, double peak = 1.0);
double psnr_from_mse(double mean_squared_error, double peak = 1.0);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  double g1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double g2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

/// Mean SSIM over all fully contained Gaussian windows of all bands. Bands
/// smaller than the window are scored with a single global window.
double ssim(const HyperCube& estimate, const HyperCube& truth, const SsimParams& params = {});

/// SSIM with one window spanning each band (population statistics), averaged over bands.
double ssim_global(const HyperCube& estimate, const HyperCube& truth, double g1 = 1e-4,
                   double g2 = 9e-4);

/// Removes `border_px` pixels from every side.
HyperCube crop_intersection(const HyperCube& cube, int border_px);

/// Border width that keeps the full-resolution fraction of 200 px at 2448 px width.
int intersection_border(int width_px);

enum class Region { full, intersected };
std::string to_string(Region region);

struct QualityScore {
  std::string scene;
  std::string method;
  Region region = Region::full;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

}  // namespace hexspec
