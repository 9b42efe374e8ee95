#include "hexspec/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <png.h>

namespace hexspec {
namespace {

static_assert(sizeof(float) == 4);

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png_rows(const std::filesystem::path& path, int width, int height, int channels,
                    const std::vector<std::uint8_t>& rows) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError(fmt::format("failed to encode PNG '{}'", path.string()));
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(y) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError(fmt::format("failed to close '{}'", path.string()));
}

}  // namespace

void write_cube(std::ostream& out, const HyperCube& cube, const BandPlan& plan) {
  if (cube.bands() != plan.count)
    throw DimensionError("band plan does not match the cube band count");
  out << fmt::format("HSC1 {} {} {} {} {}\n", cube.width(), cube.height(), cube.bands(),
                     plan.start_nm, plan.step_nm);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(cube.width()));
  for (const auto& band : cube.all_bands()) {
    const auto px = band.pixels();
    for (int y = 0; y < cube.height(); ++y) {
      for (int x = 0; x < cube.width(); ++x)
        row[static_cast<std::size_t>(x)] =
            to_little_endian(std::bit_cast<std::uint32_t>(px[static_cast<std::size_t>(y) * cube.width() + x]));
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
    }
  }
  if (!out) throw IoError("failed to write cube stream");
}

void write_cube(const std::filesystem::path& path, const HyperCube& cube, const BandPlan& plan) {
  auto out = open_out(path);
  try {
    write_cube(out, cube, plan);
  } catch (const IoError&) {
    throw IoError(fmt::format("failed to write cube '{}'", path.string()));
  }
}

CubeFile read_cube(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("missing cube header");
  std::istringstream fields(header);
  std::string magic;
  int width = 0, height = 0, bands = 0;
  double start = 0.0, step = 0.0;
  if (!(fields >> magic >> width >> height >> bands >> start >> step) || magic != "HSC1")
    throw IoError(fmt::format("malformed cube header '{}'", header));
  BandPlan plan{bands, start, step, step};
  plan.validate();
  HyperCube cube(width, height, bands);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(width));
  for (auto& band : cube.all_bands()) {
    auto px = band.pixels();
    for (int y = 0; y < height; ++y) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
      if (!in) throw IoError("truncated cube payload");
      for (int x = 0; x < width; ++x)
        px[static_cast<std::size_t>(y) * width + x] =
            std::bit_cast<float>(to_little_endian(row[static_cast<std::size_t>(x)]));
    }
  }
  return {std::move(cube), plan};
}

CubeFile read_cube(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_cube(in);
  } catch (const IoError& e) {
    throw IoError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void write_pgm(const std::filesystem::path& path, const Image& image, int bits) {
  if (bits != 8 && bits != 16) throw ConfigError("PGM bit depth must be 8 or 16");
  auto out = open_out(path);
  const int maxval = bits == 8 ? 255 : 65535;
  out << "P5\n" << image.width() << ' ' << image.height() << '\n' << maxval << '\n';
  std::vector<std::uint8_t> bytes;
  bytes.reserve(image.size() * (bits / 8));
  for (float v : image.pixels()) {
    const auto q = static_cast<std::uint32_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * maxval));
    if (bits == 16) bytes.push_back(static_cast<std::uint8_t>(q >> 8));
    bytes.push_back(static_cast<std::uint8_t>(q & 0xffu));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("failed to write '{}'", path.string()));
}

void write_pgm(const std::filesystem::path& path, const Mask& mask) {
  Image img(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) img(x, y) = mask(x, y) ? 1.0f : 0.0f;
  write_pgm(path, img, 8);
}

Image read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || maxval <= 0 || maxval > 65535)
    throw IoError(fmt::format("'{}' is not a binary PGM", path.string()));
  in.get();
  Image img(width, height);
  const bool wide = maxval > 255;
  for (float& v : img.pixels()) {
    unsigned q = static_cast<unsigned char>(in.get());
    if (wide) q = (q << 8) | static_cast<unsigned char>(in.get());
    v = static_cast<float>(q) / static_cast<float>(maxval);
  }
  if (!in) throw IoError(fmt::format("'{}' is truncated", path.string()));
  return img;
}

void write_png(const std::filesystem::path& path, const Image& gray) {
  std::vector<std::uint8_t> rows;
  rows.reserve(gray.size());
  for (float v : gray.pixels()) rows.push_back(to_byte(v));
  write_png_rows(path, gray.width(), gray.height(), 1, rows);
}

void write_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> rows;
  rows.reserve(mask.size());
  for (auto v : mask.cells()) rows.push_back(v ? 255 : 0);
  write_png_rows(path, mask.width(), mask.height(), 1, rows);
}

void write_png(const std::filesystem::path& path, const RgbImage& rgb) {
  if (!rgb.r.same_size(rgb.g) || !rgb.r.same_size(rgb.b))
    throw DimensionError("RGB planes differ in size");
  std::vector<std::uint8_t> rows;
  rows.reserve(rgb.r.size() * 3);
  const auto r = rgb.r.pixels();
  const auto g = rgb.g.pixels();
  const auto b = rgb.b.pixels();
  for (std::size_t i = 0; i < r.size(); ++i) {
    rows.push_back(to_byte(srgb_encode(r[i])));
    rows.push_back(to_byte(srgb_encode(g[i])));
    rows.push_back(to_byte(srgb_encode(b[i])));
  }
  write_png_rows(path, rgb.r.width(), rgb.r.height(), 3, rows);
}

Image normalize_for_display(const Image& image, float lo, float hi) {
  Image out(image.width(), image.height());
  const float span = hi > lo ? hi - lo : 1.0f;
  auto dst = out.pixels();
  const auto src = image.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp((src[i] - lo) / span, 0.0f, 1.0f);
  return out;
}

}  // namespace hexspec
