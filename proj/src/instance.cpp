#include "ohrr/instance.hpp"

#include <cmath>

#include "ohrr/matcore.hpp"

namespace ohrr {

const char* reduction_status_name(ReductionStatus s) {
  switch (s) {
    case ReductionStatus::Regular: return "Regular";
    case ReductionStatus::InfiniteRate: return "InfiniteRate";
    case ReductionStatus::TrivialQuadrant: return "TrivialQuadrant";
  }
  return "Unknown";
}

namespace {

void validate_canonical(const CanonicalInstance& inst, const TolPolicy& tol) {
  if (inst.kx.dim() != inst.m || inst.ky.dim() != inst.m ||
      inst.kn.dim() != inst.m || inst.d.dim() != inst.m)
    throw Error(ErrorKind::DimMismatch, "canonical instance dims inconsistent");
  if (!is_psd(inst.ky, tol) || !is_psd(inst.kn, tol))
    throw Error(ErrorKind::JointCovarianceNotPSD, "K_Y or K_N not PSD");
  if (!is_psd(inst.d, tol))
    throw Error(ErrorKind::InvalidMatrix, "D not PSD");
  const double resid = (inst.kx.mat() - inst.ky.mat() - inst.kn.mat()).norm();
  if (resid > tol.eps_residual * std::max(1.0, inst.kx.frobenius()))
    throw Error(ErrorKind::InvalidMatrix, "K_X != K_Y + K_N");
}

}  // namespace

CanonicalInstance canonicalize(const RawInstance& raw, const TolPolicy& tol) {
  if (raw.kx.dim() != raw.m || raw.d.dim() != raw.m || raw.ky.dim() != raw.k ||
      raw.kxy.rows() != raw.m || raw.kxy.cols() != raw.k)
    throw Error(ErrorKind::DimMismatch, "raw instance dims inconsistent");
  if (!is_psd(raw.d, tol))
    throw Error(ErrorKind::InvalidMatrix, "D not PSD");
  if (!schur_psd_blocks(raw.kx, raw.kxy.transpose(), raw.ky, tol))
    throw Error(ErrorKind::JointCovarianceNotPSD,
                "joint covariance of (X, Y) is not PSD");

  const Matrix a = raw.kxy * pinv(raw.ky, tol).mat();  // m x k
  CanonicalInstance inst;
  inst.m = raw.m;
  inst.kx = raw.kx;
  inst.ky = sym(a * raw.ky.mat() * a.transpose());
  inst.kn = sym(raw.kx.mat() - inst.ky.mat());
  inst.d = raw.d;
  inst.transform_log.push_back({"canonicalize", a});
  validate_canonical(inst, tol);
  return inst;
}

CanonicalInstance canonical_from_kn(const SymMat& kx, const SymMat& kn,
                                    const SymMat& d, const TolPolicy& tol) {
  CanonicalInstance inst;
  inst.m = kx.dim();
  inst.kx = kx;
  inst.kn = kn;
  inst.ky = sym(kx.mat() - kn.mat());
  inst.d = d;
  validate_canonical(inst, tol);
  return inst;
}

bool detect_trivial(const CanonicalInstance& inst, const TolPolicy& tol) {
  return loewner_leq(inst.kx, inst.d, tol);
}

std::optional<Vector> assumption_check(const CanonicalInstance& inst,
                                       const TolPolicy& tol) {
  const SymMat gap = sym(inst.kx.mat() - inst.d.mat());
  const EigenDecomp d = sym_eig(gap);
  const double norm2 = std::max(std::abs(d.values(0)),
                                std::abs(d.values(d.values.size() - 1)));
  if (d.values(0) <= tol.eps_psd * std::max(1.0, norm2)) return std::nullopt;
  return d.vectors.col(0);
}

int rank_ky(const CanonicalInstance& inst, const TolPolicy& tol) {
  return rank_of(inst.ky, tol);
}

int rank_kx(const CanonicalInstance& inst, const TolPolicy& tol) {
  return rank_of(inst.kx, tol);
}

ReducedInstance reduce_singular_kx(const CanonicalInstance& inst,
                                   const TolPolicy& tol) {
  const int m = inst.m;
  const EigenDecomp ex = sym_eig(inst.kx);
  const double lmax = std::max(ex.values.cwiseAbs().maxCoeff(), 1e-300);
  int p = 0;
  for (int i = 0; i < m; ++i)
    if (ex.values(i) > tol.eps_rank * lmax) ++p;

  ReducedInstance out;
  if (p == m) {
    out.inner = inst;
    out.lift = Matrix::Identity(m, m);
  } else {
    if (p == 0)
      throw Error(ErrorKind::InvalidMatrix, "K_X is zero; nothing to encode");
    const Matrix q1 = ex.vectors.leftCols(p);
    const Matrix q2 = ex.vectors.rightCols(m - p);
    const Matrix q = ex.vectors;

    const SymMat e = sym(q1.transpose() * inst.d.mat() * q1);
    const Matrix f = q2.transpose() * inst.d.mat() * q1;  // (m-p) x p
    const SymMat g = sym(q2.transpose() * inst.d.mat() * q2);
    if (!schur_psd_blocks(e, f, g, tol))
      throw Error(ErrorKind::DistortionBlockNotPSD,
                  "Q^T D Q fails the generalized Schur-complement PSD test");

    Matrix t = Matrix::Identity(m, m);
    t.topRightCorner(p, m - p) = -f.transpose() * pinv(g, tol).mat();
    t = t * q.transpose();
    const Matrix t1 = t.topRows(p);

    CanonicalInstance inner;
    inner.m = p;
    inner.kx = sym(t1 * inst.kx.mat() * t1.transpose());
    inner.ky = sym(t1 * inst.ky.mat() * t1.transpose());
    inner.kn = sym(inner.kx.mat() - inner.ky.mat());
    inner.d = sym(e.mat() - f.transpose() * pinv(g, tol).mat() * f);
    inner.transform_log = inst.transform_log;
    inner.transform_log.push_back({"reduce_singular_kx", t});
    validate_canonical(inner, tol);
    out.inner = inner;
    out.lift = t;
  }

  if (detect_trivial(out.inner, tol)) {
    out.status = ReductionStatus::TrivialQuadrant;
  } else {
    const double dmin = lambda_min(out.inner.d);
    const double dnorm = spectral_norm(out.inner.d);
    out.status = (dmin <= tol.eps_rank * std::max(dnorm, 1e-300))
                     ? ReductionStatus::InfiniteRate
                     : ReductionStatus::Regular;
  }
  return out;
}

CanonicalInstance perturb_singular_ky(const CanonicalInstance& inst, long n,
                                      const TolPolicy& tol) {
  if (n < 1) throw Error(ErrorKind::InvalidMatrix, "perturbation index n must be >= 1");
  const int m = inst.m;
  const EigenDecomp ey = sym_eig(inst.ky);
  const double lmax = std::max(ey.values.cwiseAbs().maxCoeff(), 1e-300);
  int p = 0;
  for (int i = 0; i < m; ++i)
    if (ey.values(i) > tol.eps_rank * lmax) ++p;
  if (p == m)
    throw Error(ErrorKind::HelperAlreadyFullRank, "K_Y already positive definite");

  const Matrix q1 = ey.vectors.leftCols(p);
  const Matrix q2 = ey.vectors.rightCols(m - p);
  const Matrix g = q2.transpose() * inst.kn.mat() * q2;  // PD when K_X is PD
  if (lambda_min(sym(g)) <= 0.0)
    throw Error(ErrorKind::InvalidMatrix,
                "perturbation needs K_X positive definite on null(K_Y)");
  const Matrix f = q2.transpose() * inst.kn.mat() * q1;

  Matrix a = Matrix::Identity(m, m);
  a.topRightCorner(p, m - p) = -f.transpose() * g.inverse();
  a = a * ey.vectors.transpose();

  const Matrix kyb = a * inst.ky.mat() * a.transpose();
  const Matrix kxb = a * inst.kx.mat() * a.transpose();
  const Matrix db = a * inst.d.mat() * a.transpose();

  Matrix bump = Matrix::Zero(m, m);
  bump.bottomRightCorner(m - p, m - p) = g / static_cast<double>(n);

  CanonicalInstance out;
  out.m = m;
  out.kx = sym(kxb);
  out.ky = sym(kyb + bump);
  out.kn = sym(out.kx.mat() - out.ky.mat());
  out.d = sym(db);
  out.transform_log = inst.transform_log;
  out.transform_log.push_back({"perturb_singular_ky_n=" + std::to_string(n), a});
  validate_canonical(out, tol);
  return out;
}

}  // namespace ohrr
