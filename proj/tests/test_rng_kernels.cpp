#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ohrr/kernels.hpp"
#include "ohrr/rng.hpp"

using namespace ohrr;

TEST_CASE("philox blocks are pure functions of (key, counter)") {
  const auto a = philox4x32(42, 7, 3);
  const auto b = philox4x32(42, 7, 3);
  CHECK(a == b);
  CHECK(philox4x32(42, 7, 4) != a);
  CHECK(philox4x32(43, 7, 3) != a);
}

TEST_CASE("gaussian stream is record-addressable and well distributed") {
  GaussianStream gs(123, 5);
  double fwd[8], single[8];
  for (int i = 0; i < 8; ++i) gs.fill_normals(static_cast<std::uint64_t>(i), fwd + i, 1);
  for (int i = 7; i >= 0; --i)
    gs.fill_normals(static_cast<std::uint64_t>(i), single + i, 1);
  for (int i = 0; i < 8; ++i) CHECK(fwd[i] == single[i]);

  // Moments over a larger draw.
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  double buf[4];
  for (int i = 0; i < n / 4; ++i) {
    gs.fill_normals(static_cast<std::uint64_t>(1000 + i), buf, 4);
    for (double v : buf) {
      sum += v;
      sq += v * v;
    }
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("scan_min_affine matches a naive loop and is variant-independent") {
  GaussianStream gs(7, 0);
  std::vector<double> tab(1037);
  for (std::size_t i = 0; i < tab.size(); ++i)
    gs.fill_normals(i, &tab[i], 1);

  const double w = 0.37, s = 1.7;
  double naive = std::numeric_limits<double>::infinity();
  for (const double x : tab) naive = std::min(naive, w - s * x);

  kernels::force_variant(kernels::Variant::Scalar);
  const double v_scalar = kernels::scan_min_affine(tab.data(), tab.size(), w, s);
  CHECK(v_scalar == naive);

  if (kernels::avx2_supported()) {
    kernels::force_variant(kernels::Variant::Avx2);
    const double v_avx2 = kernels::scan_min_affine(tab.data(), tab.size(), w, s);
    CHECK(v_avx2 == v_scalar);  // bit-identical: exact min selection
  }
  kernels::force_auto();
}

TEST_CASE("scan_max_det2 matches a naive loop, argmax is first attaining") {
  const double b0 = -0.5, step = 0.02;
  const std::size_t n = 51;
  GaussianStream gs(8, 0);
  for (int rep = 0; rep < 25; ++rep) {
    double r[5];
    gs.fill_normals(static_cast<std::uint64_t>(rep), r, 5);
    const double p = 0.3 + 0.2 * std::abs(r[0]);
    const double c = 0.2 * r[1];
    const double ac = 0.05 + 0.1 * std::abs(r[2]);
    const double mm = 0.02 + 0.05 * std::abs(r[3]);
    const double d = 0.1 * r[4];
    const double tol = 1e-9, tol_pd = 1e-12;

    double naive = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t naive_arg = -1;
    for (std::size_t i = 0; i < n; ++i) {
      const double b = b0 + static_cast<double>(i) * step;
      const double q1 = ac - b * b;
      const double t2 = d + b;
      const double q2 = mm - t2 * t2;
      const double u = c - b;
      const double det = p - u * u;
      if (q1 >= -tol && q2 >= -tol && det > tol_pd && det > naive) {
        naive = det;
        naive_arg = static_cast<std::ptrdiff_t>(i);
      }
    }

    std::ptrdiff_t arg = -2;
    kernels::force_variant(kernels::Variant::Scalar);
    const double vs =
        kernels::scan_max_det2(b0, step, n, p, c, ac, mm, d, tol, tol_pd, &arg);
    CHECK(vs == naive);
    CHECK(arg == naive_arg);

    if (kernels::avx2_supported()) {
      kernels::force_variant(kernels::Variant::Avx2);
      std::ptrdiff_t arg2 = -2;
      const double va = kernels::scan_max_det2(b0, step, n, p, c, ac, mm, d,
                                               tol, tol_pd, &arg2);
      CHECK(va == vs);
      CHECK(arg2 == arg);
    }
  }
  kernels::force_auto();
}

TEST_CASE("dispatcher honors the force hooks") {
  kernels::force_variant(kernels::Variant::Scalar);
  CHECK(kernels::active_variant() == kernels::Variant::Scalar);
  kernels::force_auto();
  if (kernels::avx2_supported())
    CHECK(kernels::active_variant() == kernels::Variant::Avx2);
}
