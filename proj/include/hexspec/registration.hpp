#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hexspec/array_model.hpp"
#include "hexspec/image.hpp"
#include "hexspec/spectral.hpp"

namespace hexspec {

struct DisparityParams {
  double max_disparity = 16.0;  // px at the reference baseline
  double step = 0.5;
  int census_width = 9;
  int census_height = 7;
  int aggregation_radius = 2;  // box of (2r+1)^2 census costs
  double confidence_threshold = 0.1;
  int neighbor_count = 6;
  int threads = 1;
};

/// Center-view disparity in px at the reference baseline, with per-pixel
/// confidence in [0, 1]; confidence 0 marks pixels filled from neighbours.
struct DisparityMap {
  Image disparity;
  Image confidence;
};

struct PeripheralView {
  std::reference_wrapper<const Image> image;
  CameraPose pose;
};

/// Census transform over a width x height window. Neighbours are visited in
/// raster order (center skipped) and shifted in from the least significant
/// end, so the first neighbour ends up in the highest used bit. A bit is set
/// when that neighbour is darker than the center pixel.
std::vector<std::uint64_t> census_transform(const Image& image, int window_width, int window_height);

DisparityMap estimate_disparity(const Image& center, std::span<const PeripheralView> peripherals,
                                double reference_baseline_mm, const DisparityParams& params = {});

struct WarpedChannel {
  Image values;
  Mask valid;  // 0 where the warp sampled outside the source
};

/// Inverse warp of a peripheral view onto the center grid.
WarpedChannel warp_to_center(const Image& source, const Image& disparity, const CameraPose& pose,
                             double reference_baseline_mm);

struct OcclusionParams {
  int dilation_radius = 1;
  /// Disparity margin (reference px) by which a competing pixel must be nearer to occlude.
  double depth_tolerance = 0.5;
};

/// Visibility of each center pixel in the peripheral view (1 = visible).
Mask detect_occlusions(const Image& disparity, const CameraPose& pose, double reference_baseline_mm,
                       const OcclusionParams& params = {});

struct ReconstructionParams {
  int window = 21;
  int min_valid = 16;
  double regularization = 1e-7;
  /// With a disparity map, support pixels nearer than the filled pixel by more
  /// than this many reference px are skipped (they belong to the occluder).
  double depth_tolerance = 1.0;
};

/// Fills pixels that are invalid or masked out by a locally fitted affine
/// model of the guide image; other pixels pass through unchanged.
Image reconstruct_occluded(const WarpedChannel& warped, const Mask& visible, const Image& guide,
                           const ReconstructionParams& params = {});
/// As above, restricting the regression support to surfaces at or behind the
/// filled pixel's disparity.
Image reconstruct_occluded(const WarpedChannel& warped, const Mask& visible, const Image& guide,
                           const Image& disparity, const ReconstructionParams& params = {});

struct RegistrationParams {
  DisparityParams disparity;
  OcclusionParams occlusion;
  ReconstructionParams reconstruction;
  int threads = 1;
};

struct RegistrationResult {
  HyperCube cube;                // band c from the camera recording band c
  DisparityMap disparity;
  std::vector<Mask> visibility;  // per camera id
};

/// Registers all views of a capture to the center camera using estimated disparity.
RegistrationResult register_all(std::span<const Image> capture, const ArrayLayout& layout,
                                const RegistrationParams& params = {});

/// Same pipeline with an externally supplied disparity map (px at the layout spacing).
RegistrationResult register_with_disparity(std::span<const Image> capture, const ArrayLayout& layout,
                                           const Image& disparity,
                                           const RegistrationParams& params = {});

}  // namespace hexspec
