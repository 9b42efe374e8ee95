#pragma once

#include <cstdint>
#include <vector>

#include "hexspec/image.hpp"
#include "hexspec/spectral.hpp"

namespace hexspec {

// ---------------------------------------------------------------------------
// Multispectral filter array

/// Periodic filter tile; cell (x, y) of the tile passes band `band_at(x, y)`.
class MosaicPattern {
 public:
  /// Row-major 6x6 tile covering bands 0..35.
  MosaicPattern();
  MosaicPattern(int tile_width, int tile_height, std::vector<int> bands);

  int tile_width() const { return tile_width_; }
  int tile_height() const { return tile_height_; }
  int band_count() const { return tile_width_ * tile_height_; }
  int band_at(int x, int y) const {
    return bands_[static_cast<std::size_t>((y % tile_height_) * tile_width_ + (x % tile_width_))];
  }
  /// Tile cell holding `band`.
  std::pair<int, int> cell_of(int band) const;

 private:
  int tile_width_;
  int tile_height_;
  std::vector<int> bands_;
};

Image mosaic(const HyperCube& cube, const MosaicPattern& pattern);

/// Reference band for spectral-difference demosaicing.
inline constexpr int kSpectralDifferenceReference = 17;

HyperCube demosaic_wbi(const Image& mosaic, const MosaicPattern& pattern);
HyperCube demosaic_sd(const Image& mosaic, const MosaicPattern& pattern,
                      int reference_band = kSpectralDifferenceReference);
HyperCube demosaic_isd(const Image& mosaic, const MosaicPattern& pattern, int iterations = 3,
                       int reference_band = kSpectralDifferenceReference);
HyperCube demosaic_dwt(const Image& mosaic, const MosaicPattern& pattern);

/// Interpolates the samples of one band (values at its tile sites of `sparse`)
/// by normalized tent-kernel convolution; equals bilinear interpolation away
/// from the image border.
Image interpolate_band(const Image& sparse, const MosaicPattern& pattern, int band);

/// One-level orthonormal 2D Haar transform, subbands stored in quadrants
/// (LL top-left, HL top-right, LH bottom-left, HH bottom-right). Even sizes only.
Image haar_forward(const Image& image);
Image haar_inverse(const Image& coefficients);

// ---------------------------------------------------------------------------
// Coded aperture

/// Void-and-cluster rank array: each cell holds its rank in [0, width*height).
std::vector<std::int32_t> void_and_cluster_ranks(int width, int height, std::uint64_t seed,
                                                 double sigma = 1.5);

/// Binary transmission mask: cells whose rank falls in the lower half are open.
Mask blue_noise_mask(int width, int height, std::uint64_t seed);

/// Sheared CASSI measurement of width cube.width() + bands - 1.
Image cassi_forward(const HyperCube& cube, const Mask& mask);
HyperCube cassi_adjoint(const Image& measurement, const Mask& mask, int bands);
/// Diagonal of A A^T: number of open mask cells projecting onto each sensor pixel.
Image cassi_gram_diagonal(const Mask& mask, int bands);

/// Anisotropic TV denoising (Chambolle dual projection), fixed inner steps.
Image tv_denoise(const Image& noisy, double weight, int steps);

struct GapParams {
  int iterations = 30;
  double tv_weight = 0.05;
  int tv_steps = 5;
  int threads = 1;
};

struct GapResult {
  HyperCube cube;
  std::vector<double> residuals;  // ||y - A x_k|| after each iteration
};

GapResult gap_tv_reconstruct(const Image& measurement, const Mask& mask, int bands,
                             const GapParams& params = {});

}  // namespace hexspec
