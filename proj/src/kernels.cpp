#include "ohrr/kernels.hpp"

#include <atomic>
#include <limits>
#include <stdexcept>

namespace ohrr::kernels {

namespace {

enum class Mode : int { Auto = 0, ForceScalar = 1, ForceAvx2 = 2 };

std::atomic<int> g_mode{static_cast<int>(Mode::Auto)};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  static const bool ok = cpu_has_avx2();
  return ok;
#else
  return false;
#endif
}

Variant active_variant() {
  const Mode m = static_cast<Mode>(g_mode.load(std::memory_order_relaxed));
  if (m == Mode::ForceScalar) return Variant::Scalar;
  if (m == Mode::ForceAvx2) return Variant::Avx2;
  return avx2_supported() ? Variant::Avx2 : Variant::Scalar;
}

void force_variant(Variant v) {
  if (v == Variant::Avx2 && !avx2_supported())
    throw std::runtime_error("AVX2 not supported on this machine");
  g_mode.store(static_cast<int>(v == Variant::Avx2 ? Mode::ForceAvx2
                                                   : Mode::ForceScalar),
               std::memory_order_relaxed);
}

void force_auto() {
  g_mode.store(static_cast<int>(Mode::Auto), std::memory_order_relaxed);
}

double scan_min_affine(const double* tab, std::size_t n, double w, double s) {
#if defined(__x86_64__) || defined(_M_X64)
  if (active_variant() == Variant::Avx2)
    return detail::scan_min_affine_avx2(tab, n, w, s);
#endif
  return detail::scan_min_affine_scalar(tab, n, w, s);
}

double scan_max_det2(double b0, double step, std::size_t n, double p, double c,
                     double ac, double mm, double d, double tol, double tol_pd,
                     std::ptrdiff_t* argmax) {
  double best;
#if defined(__x86_64__) || defined(_M_X64)
  if (active_variant() == Variant::Avx2)
    best = detail::scan_max_det2_avx2(b0, step, n, p, c, ac, mm, d, tol, tol_pd);
  else
#endif
    best = detail::scan_max_det2_scalar(b0, step, n, p, c, ac, mm, d, tol, tol_pd);

  if (argmax) {
    *argmax = -1;
    if (best > -std::numeric_limits<double>::infinity()) {
      for (std::size_t i = 0; i < n; ++i) {
        const double b = b0 + static_cast<double>(i) * step;
        const double q1 = ac - b * b;
        const double t2 = d + b;
        const double q2 = mm - t2 * t2;
        const double u = c - b;
        const double det = p - u * u;
        if (q1 >= -tol && q2 >= -tol && det > tol_pd && det == best) {
          *argmax = static_cast<std::ptrdiff_t>(i);
          break;
        }
      }
    }
  }
  return best;
}

}  // namespace ohrr::kernels
