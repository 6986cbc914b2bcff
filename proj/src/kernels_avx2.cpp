// AVX2 variants of the scan kernels. Compiled with -mavx2 only; the
// dispatcher routes here after a runtime cpuid check. Expressions mirror
// the scalar reference operation-for-operation (mul then add/sub, no FMA)
// so both variants produce bit-identical reductions.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <limits>

#include "ohrr/kernels.hpp"

namespace ohrr::kernels::detail {

namespace {

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_min_pd(lo, hi);
  lo = _mm_min_sd(lo, _mm_unpackhi_pd(lo, lo));
  return _mm_cvtsd_f64(lo);
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  lo = _mm_max_sd(lo, _mm_unpackhi_pd(lo, lo));
  return _mm_cvtsd_f64(lo);
}

}  // namespace

double scan_min_affine_avx2(const double* tab, std::size_t n, double w, double s) {
  const __m256d wv = _mm256_set1_pd(w);
  const __m256d sv = _mm256_set1_pd(s);
  __m256d acc = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d t = _mm256_loadu_pd(tab + k);
    acc = _mm256_min_pd(acc, _mm256_sub_pd(wv, _mm256_mul_pd(sv, t)));
  }
  double best = hmin(acc);
  for (; k < n; ++k) {
    const double v = w - s * tab[k];
    if (v < best) best = v;
  }
  return best;
}

double scan_max_det2_avx2(double b0, double step, std::size_t n, double p,
                          double c, double ac, double mm, double d, double tol,
                          double tol_pd) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const __m256d b0v = _mm256_set1_pd(b0);
  const __m256d stepv = _mm256_set1_pd(step);
  const __m256d pv = _mm256_set1_pd(p);
  const __m256d cv = _mm256_set1_pd(c);
  const __m256d acv = _mm256_set1_pd(ac);
  const __m256d mmv = _mm256_set1_pd(mm);
  const __m256d dv = _mm256_set1_pd(d);
  const __m256d ntol = _mm256_set1_pd(-tol);
  const __m256d tpd = _mm256_set1_pd(tol_pd);
  const __m256d ninfv = _mm256_set1_pd(ninf);
  __m256d iv = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d four = _mm256_set1_pd(4.0);
  __m256d acc = ninfv;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d b = _mm256_add_pd(b0v, _mm256_mul_pd(iv, stepv));
    const __m256d q1 = _mm256_sub_pd(acv, _mm256_mul_pd(b, b));
    const __m256d t2 = _mm256_add_pd(dv, b);
    const __m256d q2 = _mm256_sub_pd(mmv, _mm256_mul_pd(t2, t2));
    const __m256d u = _mm256_sub_pd(cv, b);
    const __m256d det = _mm256_sub_pd(pv, _mm256_mul_pd(u, u));
    __m256d mask = _mm256_cmp_pd(q1, ntol, _CMP_GE_OQ);
    mask = _mm256_and_pd(mask, _mm256_cmp_pd(q2, ntol, _CMP_GE_OQ));
    mask = _mm256_and_pd(mask, _mm256_cmp_pd(det, tpd, _CMP_GT_OQ));
    acc = _mm256_max_pd(acc, _mm256_blendv_pd(ninfv, det, mask));
    iv = _mm256_add_pd(iv, four);
  }
  double best = hmax(acc);
  for (; i < n; ++i) {
    const double b = b0 + static_cast<double>(i) * step;
    const double q1 = ac - b * b;
    const double t2 = d + b;
    const double q2 = mm - t2 * t2;
    const double u = c - b;
    const double det = p - u * u;
    if (q1 >= -tol && q2 >= -tol && det > tol_pd && det > best) best = det;
  }
  return best;
}

}  // namespace ohrr::kernels::detail

#endif  // x86_64
