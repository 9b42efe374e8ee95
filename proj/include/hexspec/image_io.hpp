#pragma once

#include <filesystem>
#include <iosfwd>

#include "hexspec/image.hpp"
#include "hexspec/spectral.hpp"

namespace hexspec {

// Cube files: ASCII header `HSC1 <width> <height> <bands> <start_nm> <step_nm>\n`
// followed by little-endian float32 samples, band-major, then row-major.
void write_cube(std::ostream& out, const HyperCube& cube, const BandPlan& plan);
void write_cube(const std::filesystem::path& path, const HyperCube& cube, const BandPlan& plan);

struct CubeFile {
  HyperCube cube;
  BandPlan plan;
};
CubeFile read_cube(std::istream& in);
CubeFile read_cube(const std::filesystem::path& path);

/// Binary PGM (P5). Values in [0, 1] are scaled to the full range of the bit depth.
void write_pgm(const std::filesystem::path& path, const Image& image, int bits = 16);
void write_pgm(const std::filesystem::path& path, const Mask& mask);
Image read_pgm(const std::filesystem::path& path);

/// 8-bit PNG. Grayscale previews are written linearly; RGB previews are sRGB-encoded.
void write_png(const std::filesystem::path& path, const Image& gray);
void write_png(const std::filesystem::path& path, const Mask& mask);
void write_png(const std::filesystem::path& path, const RgbImage& rgb);

/// Maps [lo, hi] onto [0, 1] (for disparity visualisation).
Image normalize_for_display(const Image& image, float lo, float hi);

}  // namespace hexspec
