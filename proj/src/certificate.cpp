#include "ohrr/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ohrr/matcore.hpp"

namespace ohrr {

namespace {

struct Grads {
  Matrix g1;  // (mu/2)(K_X-B1-B2)^{-1}
  Matrix g2;  // g1 - (mu/2)(K_X-B2)^{-1} + (1/2)(K_Y-B2)^{-1}
  Matrix ai, ci, ei;
};

Grads kkt_grads(const CanonicalInstance& inst, double mu,
                const SchemeParams& params) {
  Grads g;
  const Matrix kx_b2 = inst.kx.mat() - params.b2.mat();
  const Matrix kx_b1b2 = kx_b2 - params.b1.mat();
  const Matrix ky_b2 = inst.ky.mat() - params.b2.mat();
  if (lambda_min(sym(kx_b1b2)) <= 0.0 || lambda_min(sym(ky_b2)) <= 0.0)
    throw Error(ErrorKind::InfiniteObjective,
                "KKT system undefined at the feasible-set boundary");
  g.ai = kx_b1b2.inverse();
  g.ci = kx_b2.inverse();
  g.ei = ky_b2.inverse();
  g.g1 = 0.5 * mu * g.ai;
  g.g2 = g.g1 - 0.5 * mu * g.ci + 0.5 * g.ei;
  return g;
}

// Support basis: null space of `a` by relative eigen-thresholding, with the
// ambiguity guard (eigenvalue within a factor 10 of the threshold on either
// side is an error). The relative scale is floored at `scale_floor` so a
// matrix that is zero up to numerical noise maps to the whole space.
Matrix support_basis(const SymMat& a, const TolPolicy& tol, double scale_floor,
                     const char* what) {
  const EigenDecomp d = sym_eig(a);
  const double lmax = d.values.cwiseAbs().maxCoeff();
  const int m = a.dim();
  const double thresh = tol.eps_rank * std::max(lmax, scale_floor);
  std::vector<int> idx;
  for (int i = 0; i < m; ++i) {
    const double v = std::abs(d.values(i));
    if (v > thresh / 10.0 && v < thresh * 10.0)
      throw Error(ErrorKind::SupportDetectionFailed,
                  std::string(what) + ": eigenvalue within a factor 10 of the "
                                      "rank threshold");
    if (v <= thresh) idx.push_back(i);
  }
  Matrix n(m, static_cast<int>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    n.col(static_cast<int>(j)) = d.vectors.col(idx[j]);
  return n;
}

// PSD projection restricted to the span of the (orthonormal) basis n.
Matrix project_support_psd(const Matrix& x, const Matrix& n) {
  if (n.cols() == 0) return Matrix::Zero(x.rows(), x.cols());
  const Matrix core = n.transpose() * x * n;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (core + core.transpose()));
  const Vector clipped = es.eigenvalues().cwiseMax(0.0);
  return n * es.eigenvectors() * clipped.asDiagonal() *
         es.eigenvectors().transpose() * n.transpose();
}

}  // namespace

double KktResiduals::max_rel() const {
  return std::max({kkt1, kkt2, kkt3a, kkt3b, kkt4, kkt5}) / scale;
}

KktMultipliers recover_multipliers(const CanonicalInstance& inst, double mu,
                                   const SchemeParams& params,
                                   const TolPolicy& tol) {
  const Grads g = kkt_grads(inst, mu, params);
  const double floor_scale = std::max(1.0, spectral_norm(inst.kx));
  const Matrix n1 = support_basis(params.b1, tol, floor_scale, "null(B1)");
  const Matrix n2 = support_basis(params.b2, tol, floor_scale, "null(B2)");
  const SymMat slack =
      sym(inst.kx.mat() - params.b1.mat() - params.b2.mat() - inst.d.mat());
  const Matrix nl =
      support_basis(slack, tol, floor_scale, "null(K_X-B1-B2-D)");

  const int m = inst.m;
  Matrix mm1 = Matrix::Zero(m, m);
  Matrix mm2 = Matrix::Zero(m, m);
  Matrix lam = project_support_psd(0.5 * (g.g1 + g.g2), nl);

  for (int it = 0; it < 300; ++it) {
    mm1 = project_support_psd(g.g1 - lam, n1);
    mm2 = project_support_psd(g.g2 - lam, n2);
    const Matrix lam_new =
        project_support_psd(0.5 * (g.g1 - mm1 + g.g2 - mm2), nl);
    const double change = (lam_new - lam).norm();
    lam = lam_new;
    if (change <= 1e-16 * std::max(1.0, lam.norm())) break;
  }
  mm1 = project_support_psd(g.g1 - lam, n1);
  mm2 = project_support_psd(g.g2 - lam, n2);

  return {sym(mm1), sym(mm2), sym(lam)};
}

KktResiduals check_kkt(const CanonicalInstance& inst, double mu,
                       const SchemeParams& params, const KktMultipliers& mults,
                       const TolPolicy& tol) {
  const Grads g = kkt_grads(inst, mu, params);
  KktResiduals r;
  r.kkt1 = (g.g1 - mults.lambda.mat() - mults.m1.mat()).norm();
  r.kkt2 = (g.g2 - mults.lambda.mat() - mults.m2.mat()).norm();
  r.kkt3a = (params.b1.mat() * mults.m1.mat()).norm();
  r.kkt3b = (params.b2.mat() * mults.m2.mat()).norm();
  const Matrix slack =
      inst.kx.mat() - params.b1.mat() - params.b2.mat() - inst.d.mat();
  r.kkt4 = (slack * mults.lambda.mat()).norm();
  r.kkt5 = std::max({0.0, -lambda_min(mults.m1), -lambda_min(mults.m2),
                     -lambda_min(mults.lambda)});
  r.scale = std::max({1.0, g.g1.norm(), g.g2.norm()});
  r.pass = r.max_rel() <= tol.eps_residual;
  return r;
}

SymMat build_delta(const CanonicalInstance& inst, double mu,
                   const SchemeParams& params, const KktMultipliers& mults,
                   const TolPolicy& tol) {
  const Grads g = kkt_grads(inst, mu, params);
  const Matrix delta = mults.lambda.mat() - 0.5 * mu * (g.ai - g.ci);
  const Matrix alt1 = 0.5 * mu * g.ci - mults.m1.mat();
  const Matrix alt2 = 0.5 * g.ei - mults.m2.mat();
  const double scale = std::max({1.0, delta.norm(), alt1.norm(), alt2.norm()});
  if ((delta - alt1).norm() > tol.eps_residual * scale ||
      (delta - alt2).norm() > tol.eps_residual * scale)
    throw Error(ErrorKind::DeltaInconsistent,
                "the three expressions for Delta disagree");
  const SymMat d = sym(delta);
  if (!is_psd(d, tol))
    throw Error(ErrorKind::DeltaNotPsd, "Delta has a negative eigenvalue");
  if (d.frobenius() <= tol.eps_psd)
    throw Error(ErrorKind::DeltaZero, "Delta vanishes");
  return d;
}

SpectralSplit spectral_split(const SymMat& delta, const SymMat& m1,
                             const SymMat& m2, const TolPolicy& tol) {
  const int m = delta.dim();
  SpectralSplit out;

  const EigenDecomp ed = sym_eig(delta);
  const double lmax = ed.values.cwiseAbs().maxCoeff();
  const double thresh = tol.eps_rank * std::max(lmax, 1e-300);
  int r_hi = 0, r_lo = 0;
  for (int i = 0; i < m; ++i) {
    if (ed.values(i) > thresh * 10.0) ++r_hi;
    if (ed.values(i) > thresh / 10.0) ++r_lo;
  }
  out.rank_ambiguous = (r_hi != r_lo);
  out.r = r_lo;
  out.r_alt = r_hi;
  if (out.r == 0)
    throw Error(ErrorKind::DeltaZero, "Delta has rank 0 after thresholding");
  out.s.resize(m, out.r);
  for (int j = 0; j < out.r; ++j)
    out.s.col(j) = std::sqrt(std::max(ed.values(j), 0.0)) * ed.vectors.col(j);

  const auto split_psd = [&](const SymMat& a, Vector& vals, Matrix& vecs) {
    const EigenDecomp e = sym_eig(a);
    const double amax = e.values.cwiseAbs().maxCoeff();
    // Multiplier scales are Theta(1) in this domain; floor the relative
    // threshold so numerical dust never counts toward a rank.
    const double th = tol.eps_rank * std::max(amax, 1.0);
    std::vector<int> idx;
    for (int i = 0; i < m; ++i)
      if (e.values(i) > th) idx.push_back(i);
    vals.resize(static_cast<int>(idx.size()));
    vecs.resize(m, static_cast<int>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      vals(static_cast<int>(j)) = e.values(idx[j]);
      vecs.col(static_cast<int>(j)) = e.vectors.col(idx[j]);
    }
    return static_cast<int>(idx.size());
  };
  out.p = split_psd(m1, out.alpha, out.a_vecs);
  out.q = split_psd(m2, out.beta, out.b_vecs);

  if (out.r + out.p < m || out.r + out.q < m)
    throw Error(ErrorKind::RankConditionViolated,
                "r+p >= m and r+q >= m must hold (certificate failure)");
  return out;
}

double active_subspace_check(const CanonicalInstance& inst,
                             const SchemeParams& params, const Matrix& s,
                             const TolPolicy& tol) {
  (void)tol;
  const Matrix slack =
      inst.kx.mat() - params.b1.mat() - params.b2.mat() - inst.d.mat();
  return (slack * s).norm();
}

CertificateReport certify(const CanonicalInstance& inst, double mu,
                          const SchemeParams& params, const TolPolicy& tol) {
  CertificateReport rep;
  rep.mults = recover_multipliers(inst, mu, params, tol);
  rep.residuals = check_kkt(inst, mu, params, rep.mults, tol);
  rep.delta = build_delta(inst, mu, params, rep.mults, tol);
  rep.split = spectral_split(rep.delta, rep.mults.m1, rep.mults.m2, tol);
  rep.active_residual = active_subspace_check(inst, params, rep.split.s, tol);
  const double act_scale =
      std::max(1.0, inst.d.frobenius()) * std::max(1.0, rep.split.s.norm());
  rep.pass = rep.residuals.pass &&
             rep.active_residual <= tol.eps_residual * act_scale;
  return rep;
}

}  // namespace ohrr
