#pragma once

#include <cstddef>

namespace ohrr::kernels {

enum class Variant { Scalar, Avx2 };

/// Variant the dispatcher currently routes to.
Variant active_variant();

/// Test hook: pin the dispatcher to one variant. Throws if unsupported
/// on this machine. Reset by force_auto().
void force_variant(Variant v);
void force_auto();

bool avx2_supported();

/// min over k in [0, n) of (w - s * tab[k]); +infinity when n == 0.
/// Exact selection, so the result is identical across variants.
double scan_min_affine(const double* tab, std::size_t n, double w, double s);

/// Grid sweep for the 2x2 oracle inner loop. Over b = b0 + i*step,
/// i in [0, n):
///   det(b)  = p  - (c - b)^2     (determinant of the trailing 2x2 block)
///   q1(b)   = ac - b^2           (B1 PSD)
///   q2(b)   = mm - (d + b)^2     (distortion slack PSD)
/// A cell is admissible iff q1 >= -tol, q2 >= -tol and det > tol_pd.
/// Returns the max det over admissible cells (-infinity if none) and the
/// first attaining index in *argmax (-1 if none).
double scan_max_det2(double b0, double step, std::size_t n, double p, double c,
                     double ac, double mm, double d, double tol, double tol_pd,
                     std::ptrdiff_t* argmax);

namespace detail {
double scan_min_affine_scalar(const double* tab, std::size_t n, double w, double s);
double scan_max_det2_scalar(double b0, double step, std::size_t n, double p,
                            double c, double ac, double mm, double d, double tol,
                            double tol_pd);
#if defined(__x86_64__) || defined(_M_X64)
double scan_min_affine_avx2(const double* tab, std::size_t n, double w, double s);
double scan_max_det2_avx2(double b0, double step, std::size_t n, double p,
                          double c, double ac, double mm, double d, double tol,
                          double tol_pd);
#endif
}  // namespace detail

}  // namespace ohrr::kernels
