#pragma once

#include <vector>

#include "ohrr/achievability.hpp"
#include "ohrr/instance.hpp"
#include "ohrr/matcore.hpp"
#include "ohrr/rng.hpp"

namespace ohrr::testutil {

inline CanonicalInstance inst1() {
  return canonical_from_kn(SymMat(Matrix::Constant(1, 1, 1.0)),
                           SymMat(Matrix::Constant(1, 1, 0.5)),
                           SymMat(Matrix::Constant(1, 1, 0.3)));
}

inline CanonicalInstance inst2() {
  Matrix kx = Matrix::Identity(2, 2);
  Matrix kn(2, 2), d(2, 2);
  kn << 0.4, 0.0, 0.0, 0.6;
  d << 0.5, 0.0, 0.0, 0.5;
  return canonical_from_kn(SymMat(kx), SymMat(kn), SymMat(d));
}

inline Matrix random_gaussian(GaussianStream& gs, std::uint64_t rec, int r,
                              int c) {
  std::vector<double> buf(static_cast<std::size_t>(r) * c);
  gs.fill_normals(rec, buf.data(), r * c);
  return Eigen::Map<Matrix>(buf.data(), r, c);
}

inline SymMat random_psd(GaussianStream& gs, std::uint64_t rec, int m,
                         double scale = 1.0) {
  const Matrix r = random_gaussian(gs, rec, m, m);
  Matrix p = r * r.transpose();
  p *= scale / std::max(spectral_norm(sym(p)), 1e-12);
  return sym(p);
}

/// Strictly feasible scheme params for the P_G2 domain (not necessarily
/// satisfying the distortion constraint).
inline SchemeParams random_interior_params(const CanonicalInstance& inst,
                                           GaussianStream& gs,
                                           std::uint64_t rec, double t = 0.4) {
  const int m = inst.m;
  const SymMat p1 = random_psd(gs, 2 * rec, m);
  const SymMat p2 = random_psd(gs, 2 * rec + 1, m);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ga(
      p1.mat() + p2.mat(), inst.kx.mat());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gb(p2.mat(), inst.ky.mat());
  const double sigma =
      0.9 / std::max({ga.eigenvalues().maxCoeff(), gb.eigenvalues().maxCoeff(),
                      1e-12});
  return {sym(t * sigma * p1.mat()), sym(t * sigma * p2.mat())};
}

}  // namespace ohrr::testutil
