#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace diffsmooth {

// Identifies an independent random stream. The value produced at a given
// draw index depends only on (base_seed, stream_id, index), never on how
// draws are partitioned across workers.
struct SeedSpec {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_id = 0;
};

// Threefry-2x64, 20 rounds. Counter-based: a pure function of (key, counter).
std::array<std::uint64_t, 2> threefry2x64(std::array<std::uint64_t, 2> key,
                                          std::array<std::uint64_t, 2> ctr);

// Uniform variate in (0,1) at the given draw index.
double uniform_at(const SeedSpec& seed, std::uint64_t index);

// Standard normal variate at the given draw index (Box-Muller, one variate
// per counter block so indices address draws directly).
double normal_at(const SeedSpec& seed, std::uint64_t index);

// Derives a child stream. Distinct (tag, index) pairs give independent
// streams; used to split certification phases and per-draw local noise.
SeedSpec substream(const SeedSpec& seed, std::uint64_t tag, std::uint64_t index);

// Fills out[i] with normal_at(seed, index0 + i).
void fill_standard_normal(const SeedSpec& seed, std::uint64_t index0,
                          std::span<double> out);

// count x dim row-major matrix of i.i.d. standard normals.
std::vector<double> sample_standard_normal(const SeedSpec& seed,
                                           std::size_t count, std::size_t dim);

}  // namespace diffsmooth
