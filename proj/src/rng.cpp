#include "ohrr/rng.hpp"

#include <cmath>
#include <numbers>

namespace ohrr {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double u64_to_unit(std::uint64_t x) {
  // (0, 1]: Box-Muller takes log of this.
  return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> philox4x32(std::uint64_t key, std::uint64_t counter_hi,
                                        std::uint64_t counter_lo) {
  std::uint32_t c0 = static_cast<std::uint32_t>(counter_lo);
  std::uint32_t c1 = static_cast<std::uint32_t>(counter_lo >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(counter_hi);
  std::uint32_t c3 = static_cast<std::uint32_t>(counter_hi >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c0, hi0, lo0);
    mulhilo(kPhiloxM1, c2, hi1, lo1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {c0, c1, c2, c3};
}

void GaussianStream::fill_normals(std::uint64_t index, double* out, int n) const {
  int produced = 0;
  std::uint64_t block = 0;
  while (produced < n) {
    const auto r = philox4x32(key_, index, block++);
    const std::uint64_t a =
        (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    const std::uint64_t b =
        (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
    const double u1 = u64_to_unit(a);
    const double u2 = u64_to_unit(b);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    out[produced++] = rad * std::cos(ang);
    if (produced < n) out[produced++] = rad * std::sin(ang);
  }
}

double GaussianStream::uniform(std::uint64_t index, std::uint32_t slot) const {
  const auto r = philox4x32(key_, index, 0x8000000000000000ULL | slot);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  return u64_to_unit(a) * (1.0 - 0x1.0p-53);  // (0, 1)
}

}  // namespace ohrr
