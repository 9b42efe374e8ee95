#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "hexspec/errors.hpp"
#include "hexspec/metrics.hpp"
#include "test_support.hpp"

using namespace hexspec;
using hexspec::testing::random_cube;

namespace {

double mse_oracle(const HyperCube& a, const HyperCube& b) {
  double s = 0.0;
  for (int c = 0; c < a.bands(); ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const double d = double(a.at(c, x, y)) - double(b.at(c, x, y));
        s += d * d;
      }
  return s / (double(a.width()) * a.height() * a.bands());
}

// SSIM of one window with explicit weights; weights sum to 1.
double ssim_window(const HyperCube& a, const HyperCube& b, int c, int x0, int y0, int n,
                   const std::vector<double>& w2, double g1, double g2) {
  double ma = 0, mb = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double w = w2[j * n + i];
      ma += w * a.at(c, x0 + i, y0 + j);
      mb += w * b.at(c, x0 + i, y0 + j);
    }
  double va = 0, vb = 0, cov = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double w = w2[j * n + i];
      const double da = a.at(c, x0 + i, y0 + j) - ma;
      const double db = b.at(c, x0 + i, y0 + j) - mb;
      va += w * da * da;
      vb += w * db * db;
      cov += w * da * db;
    }
  return (2 * ma * mb + g1) * (2 * cov + g2) / ((ma * ma + mb * mb + g1) * (va + vb + g2));
}

double ssim_oracle(const HyperCube& a, const HyperCube& b, int n, double sigma) {
  std::vector<double> w2(n * n);
  double total = 0;
  const double r = (n - 1) / 2.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      w2[j * n + i] = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / (2 * sigma * sigma));
      total += w2[j * n + i];
    }
  for (double& w : w2) w /= total;
  double s = 0;
  int count = 0;
  for (int c = 0; c < a.bands(); ++c)
    for (int y = 0; y + n <= a.height(); ++y)
      for (int x = 0; x + n <= a.width(); ++x) {
        s += ssim_window(a, b, c, x, y, n, w2, 1e-4, 9e-4);
        ++count;
      }
  return s / count;
}

HyperCube add_noise(const HyperCube& cube, double sigma, std::uint64_t seed) {
  HyperCube out = cube;
  Rng rng(seed);
  for (auto& band : out.all_bands())
    for (float& v : band.pixels()) v += static_cast<float>(sigma * rng.normal());
  return out;
}

}  // namespace

TEST(Mse, ZeroForIdenticalCubes) {
  const auto a = random_cube(8, 6, 3, 1);
  EXPECT_EQ(mse(a, a), 0.0);
}

TEST(Mse, ConstantOffset) {
  const HyperCube a(5, 4, 2, 0.3f);
  const HyperCube b(5, 4, 2, 0.4f);
  EXPECT_NEAR(mse(a, b), 0.01, 1e-8);
}

TEST(Mse, MatchesTripleLoopOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = random_cube(4, 4, 3, seed);
    const auto b = random_cube(4, 4, 3, seed + 100);
    EXPECT_NEAR(mse(a, b), mse_oracle(a, b), 1e-12);
  }
}

TEST(Mse, RejectsShapeMismatch) {
  EXPECT_THROW(mse(HyperCube(4, 4, 3), HyperCube(4, 4, 2)), DimensionError);
  EXPECT_THROW(mse(HyperCube(4, 4, 3), HyperCube(5, 4, 3)), DimensionError);
}

TEST(Psnr, TwentyDecibelsAtHundredthMse) { EXPECT_NEAR(psnr_from_mse(0.01), 20.0, 1e-12); }

TEST(Psnr, ScaleInvariantPeak) {
  const double m = 0.0037;
  EXPECT_NEAR(psnr_from_mse(m * 255.0 * 255.0, 255.0), psnr_from_mse(m, 1.0), 1e-10);
}

TEST(Psnr, IdenticalIsPositiveInfinity) {
  const auto a = random_cube(4, 4, 2, 3);
  const double p = psnr(a, a);
  EXPECT_TRUE(std::isinf(p));
  EXPECT_GT(p, 0.0);
}

TEST(Psnr, MatchesOracle) {
  const auto a = random_cube(4, 4, 3, 7);
  const auto b = random_cube(4, 4, 3, 8);
  EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(mse_oracle(a, b)), 1e-10);
}

TEST(Psnr, StrictlyDecreasesWithNoise) {
  const auto truth = random_cube(32, 24, 3, 11);
  double previous = std::numeric_limits<double>::infinity();
  for (double sigma : {0.001, 0.004, 0.016, 0.064}) {
    const double p = psnr(add_noise(truth, sigma, 5), truth);
    EXPECT_LT(p, previous) << "sigma " << sigma;
    previous = p;
  }
}

TEST(Ssim, IdenticalIsExactlyOne) {
  const auto a = random_cube(20, 16, 3, 2);
  EXPECT_EQ(ssim(a, a), 1.0);
  EXPECT_EQ(ssim_global(a, a), 1.0);
}

TEST(Ssim, Symmetric) {
  const auto a = random_cube(24, 18, 2, 4);
  const auto b = random_cube(24, 18, 2, 5);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_NEAR(ssim_global(a, b), ssim_global(b, a), 1e-12);
}

TEST(Ssim, MatchesWindowedOracle) {
  const auto a = random_cube(15, 13, 2, 21);
  const auto b = random_cube(15, 13, 2, 22);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b, 11, 1.5), 1e-10);
}

TEST(Ssim, GlobalMatchesHandEvaluation) {
  // 4x4 single band, values chosen so the sums are easy to follow.
  HyperCube a(4, 4, 1), b(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      a.at(0, x, y) = 0.0625f * float(x + 4 * y);
      b.at(0, x, y) = 0.5f - 0.03125f * float(x * y);
    }
  double ma = 0, mb = 0;
  for (int i = 0; i < 16; ++i) {
    ma += a.band(0).pixels()[i];
    mb += b.band(0).pixels()[i];
  }
  ma /= 16;
  mb /= 16;
  double va = 0, vb = 0, cov = 0;
  for (int i = 0; i < 16; ++i) {
    const double da = a.band(0).pixels()[i] - ma, db = b.band(0).pixels()[i] - mb;
    va += da * da;
    vb += db * db;
    cov += da * db;
  }
  va /= 16;
  vb /= 16;
  cov /= 16;
  const double g1 = 1e-4, g2 = 9e-4;
  const double expected = (2 * ma * mb + g1) * (2 * cov + g2) / ((ma * ma + mb * mb + g1) * (va + vb + g2));
  EXPECT_NEAR(ssim_global(a, b), expected, 1e-10);
}

TEST(Ssim, DecreasesWithNoiseOnConstantImage) {
  const HyperCube g(32, 32, 1, 0.5f);
  double previous = 1.0;
  for (double eps : {0.01, 0.03, 0.1}) {
    const double s = ssim(add_noise(g, eps, 9), g);
    EXPECT_LT(s, previous);
    previous = s;
  }
}

TEST(Ssim, SmallImagesFallBackToGlobal) {
  const auto a = random_cube(6, 5, 2, 31);
  const auto b = random_cube(6, 5, 2, 32);
  EXPECT_NEAR(ssim(a, b), ssim_global(a, b), 1e-12);
}

TEST(Ssim, RejectsShapeMismatch) {
  EXPECT_THROW(ssim(HyperCube(16, 16, 1), HyperCube(16, 15, 1)), DimensionError);
}

TEST(CropIntersection, FullScaleGeometry) {
  const HyperCube cube(2448, 2048, 1);
  const HyperCube cropped = crop_intersection(cube, 200);
  EXPECT_EQ(cropped.width(), 2048);
  EXPECT_EQ(cropped.height(), 1648);
}

TEST(CropIntersection, ZeroBorderIsIdentity) {
  const auto a = random_cube(9, 7, 2, 3);
  EXPECT_EQ(crop_intersection(a, 0), a);
}

TEST(CropIntersection, ProportionalBorder) {
  EXPECT_EQ(intersection_border(2448), 200);
  EXPECT_EQ(intersection_border(320), 26);
  const HyperCube cropped = crop_intersection(HyperCube(300, 300, 1), intersection_border(300));
  EXPECT_EQ(cropped.width(), 250);
  EXPECT_EQ(cropped.height(), 250);
}

TEST(CropIntersection, RejectsOversizedBorder) {
  EXPECT_THROW(crop_intersection(HyperCube(10, 8, 1), 4), DimensionError);
  EXPECT_NO_THROW(crop_intersection(HyperCube(10, 8, 1), 3));
}

TEST(CropIntersection, CommutesWithMetrics) {
  const auto a = random_cube(12, 10, 2, 41);
  const auto b = random_cube(12, 10, 2, 42);
  const int border = 2;
  double s = 0;
  int n = 0;
  for (int c = 0; c < 2; ++c)
    for (int y = border; y < 10 - border; ++y)
      for (int x = border; x < 12 - border; ++x) {
        const double d = double(a.at(c, x, y)) - b.at(c, x, y);
        s += d * d;
        ++n;
      }
  EXPECT_NEAR(mse(crop_intersection(a, border), crop_intersection(b, border)), s / n, 1e-12);
  const HyperCube ca = crop_intersection(a, border);
  EXPECT_EQ(ca.at(1, 0, 0), a.at(1, border, border));
}

TEST(Region, Names) {
  EXPECT_EQ(to_string(Region::full), "full");
  EXPECT_EQ(to_string(Region::intersected), "intersected");
}
