#pragma once

#include <array>
#include <cstdint>

namespace ohrr {

/// Philox4x32-10 counter block cipher. Pure function of (key, counter), so
/// any sample index can be generated independently of evaluation order.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t key, std::uint64_t counter_hi,
                                        std::uint64_t counter_lo);

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based Gaussian stream. Streams are identified by (seed, stream);
/// record `index` always yields the same normals regardless of which other
/// records were generated before it.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x9E3779B97F4A7C15ULL))) {}

  /// Fill out[0..n) with standard normals of record `index`.
  void fill_normals(std::uint64_t index, double* out, int n) const;

  /// Uniform double in (0, 1), record `index`, slot `slot`.
  double uniform(std::uint64_t index, std::uint32_t slot = 0) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace ohrr
