#include <algorithm>
#include <cmath>
#include <limits>

#include "hexspec/errors.hpp"
#include "hexspec/random.hpp"
#include "hexspec/snapshot.hpp"

namespace hexspec {
namespace {

// Gaussian energy field on a torus with row-wise caches of the extreme
// energies among set and unset cells.
class EnergyField {
 public:
  EnergyField(int width, int height, double sigma)
      : w_(width), h_(height), radius_(std::max(1, static_cast<int>(std::ceil(4.0 * sigma)))),
        energy_(static_cast<std::size_t>(width) * height, 0.0),
        bits_(static_cast<std::size_t>(width) * height, 0),
        row_min_zero_(static_cast<std::size_t>(height)), row_max_one_(static_cast<std::size_t>(height)) {
    const int side = 2 * radius_ + 1;
    kernel_.resize(static_cast<std::size_t>(side) * side);
    for (int dy = -radius_; dy <= radius_; ++dy)
      for (int dx = -radius_; dx <= radius_; ++dx)
        kernel_[static_cast<std::size_t>((dy + radius_) * side + dx + radius_)] =
            std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    for (int y = 0; y < h_; ++y) refresh_row(y);
  }

  bool bit(int i) const { return bits_[static_cast<std::size_t>(i)] != 0; }

  void set(int i, bool value) {
    if (bit(i) == value) return;
    bits_[static_cast<std::size_t>(i)] = value ? 1 : 0;
    const double sign = value ? 1.0 : -1.0;
    const int cx = i % w_;
    const int cy = i / w_;
    const int side = 2 * radius_ + 1;
    for (int dy = -radius_; dy <= radius_; ++dy) {
      const int y = ((cy + dy) % h_ + h_) % h_;
      for (int dx = -radius_; dx <= radius_; ++dx) {
        const int x = ((cx + dx) % w_ + w_) % w_;
        energy_[static_cast<std::size_t>(y) * w_ + x] +=
            sign * kernel_[static_cast<std::size_t>((dy + radius_) * side + dx + radius_)];
      }
    }
    if (2 * radius_ + 1 >= h_) {
      for (int y = 0; y < h_; ++y) refresh_row(y);
    } else {
      for (int dy = -radius_; dy <= radius_; ++dy) refresh_row(((cy + dy) % h_ + h_) % h_);
    }
  }

  /// Unset cell with the lowest energy (largest void); -1 if none.
  int largest_void() const {
    int best = -1;
    double e = std::numeric_limits<double>::infinity();
    for (const auto& r : row_min_zero_)
      if (r.index >= 0 && r.energy < e) {
        e = r.energy;
        best = r.index;
      }
    return best;
  }

  /// Set cell with the highest energy (tightest cluster); -1 if none.
  int tightest_cluster() const {
    int best = -1;
    double e = -std::numeric_limits<double>::infinity();
    for (const auto& r : row_max_one_)
      if (r.index >= 0 && r.energy > e) {
        e = r.energy;
        best = r.index;
      }
    return best;
  }

 private:
  struct Extreme {
    int index = -1;
    double energy = 0.0;
  };

  void refresh_row(int y) {
    Extreme lo, hi;
    for (int x = 0; x < w_; ++x) {
      const int i = y * w_ + x;
      const double e = energy_[static_cast<std::size_t>(i)];
      if (bits_[static_cast<std::size_t>(i)]) {
        if (hi.index < 0 || e > hi.energy) hi = {i, e};
      } else {
        if (lo.index < 0 || e < lo.energy) lo = {i, e};
      }
    }
    row_min_zero_[static_cast<std::size_t>(y)] = lo;
    row_max_one_[static_cast<std::size_t>(y)] = hi;
  }

  int w_;
  int h_;
  int radius_;
  std::vector<double> kernel_;
  std::vector<double> energy_;
  std::vector<std::uint8_t> bits_;
  std::vector<Extreme> row_min_zero_;
  std::vector<Extreme> row_max_one_;
};

}  // namespace

std::vector<std::int32_t> void_and_cluster_ranks(int width, int height, std::uint64_t seed,
                                                 double sigma) {
  if (width <= 0 || height <= 0) throw DimensionError("mask dimensions must be positive");
  if (!(sigma > 0.0)) throw ConfigError("void-and-cluster sigma must be positive");
  const int n = width * height;
  const int initial = std::max(1, static_cast<int>(std::lround(0.1 * n)));

  // Random initial pattern (partial Fisher-Yates).
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (int i = 0; i < initial; ++i) {
    const int j = i + static_cast<int>(rng.next() % static_cast<std::uint64_t>(n - i));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  EnergyField field(width, height, sigma);
  for (int i = 0; i < initial; ++i) field.set(order[static_cast<std::size_t>(i)], true);

  // Relax: move the tightest cluster into the largest void until stable.
  for (int guard = 0; guard < 16 * n; ++guard) {
    const int cluster = field.tightest_cluster();
    field.set(cluster, false);
    const int v = field.largest_void();
    field.set(v, true);
    if (v == cluster) break;
  }
  std::vector<std::uint8_t> prototype(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) prototype[static_cast<std::size_t>(i)] = field.bit(i);

  std::vector<std::int32_t> rank(static_cast<std::size_t>(n), -1);
  // Rank the prototype's points by repeatedly removing the tightest cluster.
  for (int ones = initial; ones > 0; --ones) {
    const int c = field.tightest_cluster();
    field.set(c, false);
    rank[static_cast<std::size_t>(c)] = ones - 1;
  }
  for (int i = 0; i < n; ++i) field.set(i, prototype[static_cast<std::size_t>(i)] != 0);
  // Fill the remaining cells into the largest voids. Past half occupancy this is
  // the same as removing the tightest cluster of unset cells, since the total
  // energy of set and unset cells is constant.
  for (int ones = initial; ones < n; ++ones) {
    const int v = field.largest_void();
    field.set(v, true);
    rank[static_cast<std::size_t>(v)] = ones;
  }
  return rank;
}

Mask blue_noise_mask(int width, int height, std::uint64_t seed) {
  const auto rank = void_and_cluster_ranks(width, height, seed);
  Mask mask(width, height, 0);
  const double threshold = 0.5 * static_cast<double>(rank.size());
  auto cells = mask.cells();
  for (std::size_t i = 0; i < rank.size(); ++i) cells[i] = rank[i] < threshold ? 1 : 0;
  return mask;
}

}  // namespace hexspec
