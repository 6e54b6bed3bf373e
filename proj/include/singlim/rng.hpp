#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace singlim {

// Threefry-2x64, 20 rounds. Counter-based: each (key, counter) pair yields an
// independent 128-bit block, so draws can be indexed by (seed, sample, step,
// mode) and are reproducible under any evaluation order.
inline void threefry2x64(std::uint64_t k0, std::uint64_t k1, std::uint64_t c0,
                         std::uint64_t c1, std::uint64_t& x0,
                         std::uint64_t& x1) {
  constexpr std::uint64_t parity = 0x1BD11BDAA9FC1A22ull;
  constexpr int rot[8] = {16, 42, 12, 31, 16, 32, 24, 21};
  const std::uint64_t ks[3] = {k0, k1, parity ^ k0 ^ k1};
  x0 = c0 + ks[0];
  x1 = c1 + ks[1];
  for (int r = 0; r < 20; ++r) {
    x0 += x1;
    const int s = rot[r % 8];
    x1 = (x1 << s) | (x1 >> (64 - s));
    x1 ^= x0;
    if ((r + 1) % 4 == 0) {
      const int j = (r + 1) / 4;
      x0 += ks[j % 3];
      x1 += ks[(j + 1) % 3] + static_cast<std::uint64_t>(j);
    }
  }
}

// Maps to (0, 1]; the +1 keeps log() finite.
inline double u64_to_unit(std::uint64_t x) {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

struct GaussianPair {
  double g0;
  double g1;
};

// Two independent N(0,1) draws for one counter tuple (Box-Muller).
inline GaussianPair gaussian_pair(std::uint64_t master, std::uint64_t sample,
                                  std::uint64_t step, std::uint64_t mode) {
  std::uint64_t x0 = 0, x1 = 0;
  threefry2x64(master, sample, step, mode, x0, x1);
  const double r = std::sqrt(-2.0 * std::log(u64_to_unit(x0)));
  const double th = 2.0 * std::numbers::pi * u64_to_unit(x1);
  return {r * std::cos(th), r * std::sin(th)};
}

}  // namespace singlim
