#include "diffsmooth/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace diffsmooth {

namespace {

constexpr std::uint64_t kTagUniform = 0x75756e6966ull;  // "unif"
constexpr std::uint64_t kTagNormal = 0x6e6f726dull;     // "norm"

// Maps a 64-bit word to (0,1); never returns 0 or 1.
inline double open01(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

std::array<std::uint64_t, 2> threefry2x64(std::array<std::uint64_t, 2> key,
                                          std::array<std::uint64_t, 2> x) {
  constexpr std::uint64_t kParity = 0x1BD11BDAA9FC1A22ull;
  constexpr int kRot[8] = {16, 42, 12, 31, 16, 32, 24, 21};
  const std::uint64_t ks[3] = {key[0], key[1], kParity ^ key[0] ^ key[1]};
  x[0] += ks[0];
  x[1] += ks[1];
  for (int r = 0; r < 20; ++r) {
    x[0] += x[1];
    x[1] = std::rotl(x[1], kRot[r % 8]);
    x[1] ^= x[0];
    if ((r + 1) % 4 == 0) {
      const int s = (r + 1) / 4;
      x[0] += ks[s % 3];
      x[1] += ks[(s + 1) % 3] + static_cast<std::uint64_t>(s);
    }
  }
  return x;
}

double uniform_at(const SeedSpec& seed, std::uint64_t index) {
  const auto r =
      threefry2x64({seed.base_seed, seed.stream_id}, {index, kTagUniform});
  return open01(r[0]);
}

double normal_at(const SeedSpec& seed, std::uint64_t index) {
  const auto r =
      threefry2x64({seed.base_seed, seed.stream_id}, {index, kTagNormal});
  const double u1 = open01(r[0]);
  const double u2 = open01(r[1]);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

SeedSpec substream(const SeedSpec& seed, std::uint64_t tag,
                   std::uint64_t index) {
  const auto r = threefry2x64({seed.base_seed, seed.stream_id}, {tag, index});
  return SeedSpec{r[0], r[1]};
}

void fill_standard_normal(const SeedSpec& seed, std::uint64_t index0,
                          std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = normal_at(seed, index0 + i);
  }
}

std::vector<double> sample_standard_normal(const SeedSpec& seed,
                                           std::size_t count,
                                           std::size_t dim) {
  std::vector<double> m(count * dim);
  fill_standard_normal(seed, 0, m);
  return m;
}

}  // namespace diffsmooth
