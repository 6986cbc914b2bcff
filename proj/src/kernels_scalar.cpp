#include <limits>

#include "ohrr/kernels.hpp"

namespace ohrr::kernels::detail {

double scan_min_affine_scalar(const double* tab, std::size_t n, double w, double s) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double v = w - s * tab[k];
    if (v < best) best = v;
  }
  return best;
}

double scan_max_det2_scalar(double b0, double step, std::size_t n, double p,
                            double c, double ac, double mm, double d, double tol,
                            double tol_pd) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
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
