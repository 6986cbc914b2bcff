#include "ohrr/achievability.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <vector>

#include "ohrr/matcore.hpp"

namespace ohrr {

namespace {

// Orthonormal basis of Sym(m) under the Frobenius inner product.
std::vector<Matrix> sym_basis(int m) {
  std::vector<Matrix> basis;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      Matrix e = Matrix::Zero(m, m);
      if (i == j) {
        e(i, i) = 1.0;
      } else {
        e(i, j) = e(j, i) = inv_sqrt2;
      }
      basis.push_back(e);
    }
  return basis;
}

}  // namespace

RatePoint rates_from_b(const CanonicalInstance& inst, const SchemeParams& params,
                       double mu) {
  const TolPolicy tol;
  const SymMat kx_b2 = sym(inst.kx.mat() - params.b2.mat());
  const SymMat kx_b1b2 = sym(kx_b2.mat() - params.b1.mat());
  const SymMat ky_b2 = sym(inst.ky.mat() - params.b2.mat());
  const double scale = std::max(1.0, spectral_norm(inst.kx));
  if (lambda_min(kx_b1b2) <= tol.eps_psd * scale ||
      lambda_min(ky_b2) <= tol.eps_psd * scale)
    throw Error(ErrorKind::InfiniteRate,
                "K_X - B1 - B2 or K_Y - B2 singular; rate infinite");
  RatePoint pt;
  pt.mu = mu;
  pt.r1 = 0.5 * (logdet2(kx_b2) - logdet2(kx_b1b2));
  pt.r2 = 0.5 * (logdet2(inst.ky) - logdet2(ky_b2));
  if (pt.r1 < 0.0) pt.r1 = std::max(pt.r1, 0.0);
  if (pt.r2 < 0.0) pt.r2 = std::max(pt.r2, 0.0);
  pt.v = mu * pt.r1 + pt.r2;
  return pt;
}

bool feasible_for_distortion(const CanonicalInstance& inst,
                             const SchemeParams& params, const SymMat& d,
                             const TolPolicy& tol) {
  if (!is_psd(params.b1, tol) || !is_psd(params.b2, tol)) return false;
  const SymMat ky_b2 = sym(inst.ky.mat() - params.b2.mat());
  const SymMat kx_b1b2 =
      sym(inst.kx.mat() - params.b1.mat() - params.b2.mat());
  if (!is_psd(ky_b2, tol) || !is_psd(kx_b1b2, tol)) return false;
  return loewner_leq(kx_b1b2, d, tol);
}

PtPtSolution solve_pt_pt(const CanonicalInstance& inst, double mu,
                         const TolPolicy& tol) {
  const int m = inst.m;
  if (lambda_min(inst.kx) <= tol.eps_psd * std::max(1.0, spectral_norm(inst.kx)))
    throw Error(ErrorKind::InvalidMatrix, "solve_pt_pt needs K_X positive definite");
  if (lambda_min(inst.d) <= tol.eps_psd * std::max(1.0, spectral_norm(inst.d)))
    throw Error(ErrorKind::InfeasibleDistortion,
                "D has a zero eigenvalue; the rate is infinite");

  const Matrix kx = inst.kx.mat();
  const Matrix d = inst.d.mat();

  // Strictly interior start: harmonic mean is below both K_X and D.
  // The slacks S1 = K_X - Q and S2 = D - Q are tracked incrementally so the
  // gradient evaluation does not cancel when a constraint becomes active.
  Matrix q = 0.9 * (kx.inverse() + d.inverse()).inverse();
  Matrix s1 = kx - q;
  Matrix s2 = d - q;

  const auto basis = sym_basis(m);
  const int nb = static_cast<int>(basis.size());

  const auto barrier_value = [&](const Matrix& qq, const Matrix& sa,
                                 const Matrix& sb, double w) {
    Eigen::LLT<Matrix> l0(qq), l1(sa), l2(sb);
    if (l0.info() != Eigen::Success || l1.info() != Eigen::Success ||
        l2.info() != Eigen::Success)
      return -std::numeric_limits<double>::infinity();
    auto ld = [](const Eigen::LLT<Matrix>& l, int n) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::log(l.matrixLLT()(i, i));
      return 2.0 * s;
    };
    return ld(l0, m) + w * (ld(l1, m) + ld(l2, m));
  };

  double w = 1.0;
  double grad_norm = 0.0;
  for (int outer = 0; outer < 80; ++outer) {
    for (int it = 0; it < 60; ++it) {
      const Matrix qi = q.inverse();
      const Matrix r1 = s1.inverse();
      const Matrix r2 = s2.inverse();
      const Matrix grad = qi - w * r1 - w * r2;
      grad_norm = grad.norm();
      if (grad_norm <= 1e-13 * std::max(1.0, qi.norm())) break;

      Eigen::MatrixXd h(nb, nb);
      Eigen::VectorXd g(nb);
      for (int a = 0; a < nb; ++a) {
        const Matrix ha = -qi * basis[a] * qi - w * r1 * basis[a] * r1 -
                          w * r2 * basis[a] * r2;
        for (int b = 0; b <= a; ++b) {
          h(a, b) = (ha.transpose() * basis[b]).trace();
          h(b, a) = h(a, b);
        }
        g(a) = (grad.transpose() * basis[a]).trace();
      }
      const Eigen::VectorXd step = h.ldlt().solve(-g);
      Matrix dir = Matrix::Zero(m, m);
      for (int a = 0; a < nb; ++a) dir += step(a) * basis[a];

      const double f0 = barrier_value(q, s1, s2, w);
      const double slope = (grad.transpose() * dir).trace();
      double t = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Matrix qn = q + t * dir;
        const Matrix s1n = s1 - t * dir;
        const Matrix s2n = s2 - t * dir;
        const double fn = barrier_value(qn, s1n, s2n, w);
        const bool armijo = std::isfinite(fn) && fn >= f0 + 1e-4 * t * slope;
        bool grad_ok = false;
        if (!armijo && std::isfinite(fn)) {
          const Matrix gn =
              qn.inverse() - w * s1n.inverse() - w * s2n.inverse();
          grad_ok = gn.norm() < 0.9 * grad_norm;
        }
        if (armijo || grad_ok) {
          q = qn;
          s1 = s1n;
          s2 = s2n;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    }
    if (w * 2.0 * m <= 1e-10) break;
    w *= 0.5;
  }

  PtPtSolution sol;
  sol.q = sym(q);
  sol.duality_measure = w * 2.0 * m;
  sol.barrier_residual = grad_norm;
  sol.value = (mu / 2.0) * (logdet2(inst.kx) - logdet2(sol.q));
  return sol;
}

namespace {

// Factor Psi = sum of positive eigenpairs into (P = V^T, K_Z = diag(1/lambda))
// so that P^T K_Z^{-1} P = Psi. `want_rank` positive eigenvalues must exist.
void information_channel(const Matrix& psi, int want_rank, double scale,
                         const TolPolicy& tol, Matrix& p_out, SymMat& kz_out) {
  const EigenDecomp e = sym_eig(sym(psi));
  std::vector<int> idx;
  for (int i = 0; i < e.values.size(); ++i)
    if (e.values(i) > tol.eps_rank * std::max(scale, 1e-300)) idx.push_back(i);
  if (static_cast<int>(idx.size()) != want_rank)
    throw Error(ErrorKind::RankDeficiencyInconsistent,
                "channel rank does not match rank of B");
  const int r = want_rank;
  Matrix p(r, psi.rows());
  Matrix kz = Matrix::Zero(r, r);
  for (int j = 0; j < r; ++j) {
    p.row(j) = e.vectors.col(idx[j]).transpose();
    kz(j, j) = 1.0 / e.values(idx[j]);
  }
  p_out = p;
  kz_out = r > 0 ? SymMat(kz) : SymMat();
}

}  // namespace

TestChannels build_test_channels(const CanonicalInstance& inst,
                                 const SchemeParams& params,
                                 const TolPolicy& tol) {
  const int m = inst.m;
  const Matrix ky = inst.ky.mat();
  const Matrix kx = inst.kx.mat();
  const SymMat ky_b2 = sym(ky - params.b2.mat());
  const SymMat kx_b2 = sym(kx - params.b2.mat());
  const SymMat kx_b1b2 = sym(kx_b2.mat() - params.b1.mat());
  const double scale = std::max(1.0, spectral_norm(inst.kx));
  if (lambda_min(kx_b1b2) <= tol.eps_psd * scale)
    throw Error(ErrorKind::InfiniteRate, "K_X - B1 - B2 singular");

  TestChannels ch;
  ch.pv = Matrix(0, m);
  ch.pu = Matrix(0, m);

  const int rv = rank_of(params.b2, tol);
  if (rv > 0) {
    if (lambda_min(ky_b2) <= tol.eps_psd * scale)
      throw Error(ErrorKind::InfiniteRate, "K_Y - B2 singular with B2 nonzero");
    if (lambda_min(inst.ky) <= tol.eps_psd * scale)
      throw Error(ErrorKind::InvalidMatrix, "helper covariance singular");
    const Matrix psi = ky_b2.mat().inverse() - ky.inverse();
    information_channel(psi, rv, psi.norm(), tol, ch.pv, ch.kzv);
  }

  const int ru = rank_of(params.b1, tol);
  if (ru > 0) {
    const Matrix phi = kx_b1b2.mat().inverse() - kx_b2.mat().inverse();
    information_channel(phi, ru, phi.norm(), tol, ch.pu, ch.kzu);
  }

  // The induced conditionals must hit their targets.
  const InducedConditionals ind = induced_conditionals(inst, ch);
  const double res_v = (ind.ky_given_v.mat() - ky_b2.mat()).norm();
  const double res_u = (ind.kx_given_uv.mat() - kx_b1b2.mat()).norm();
  if (res_v > tol.eps_residual * scale || res_u > tol.eps_residual * scale)
    throw Error(ErrorKind::RankDeficiencyInconsistent,
                "induced conditional covariances miss their targets");
  return ch;
}

InducedConditionals induced_conditionals(const CanonicalInstance& inst,
                                         const TestChannels& ch) {
  const int m = inst.m;
  const Matrix ky = inst.ky.mat();
  const Matrix kx = inst.kx.mat();
  const int rv = static_cast<int>(ch.pv.rows());
  const int ru = static_cast<int>(ch.pu.rows());

  InducedConditionals out;
  // K_{Y|V}
  if (rv == 0) {
    out.ky_given_v = inst.ky;
  } else {
    const Matrix kv = ch.pv * ky * ch.pv.transpose() + ch.kzv.mat();
    const Matrix cyv = ky * ch.pv.transpose();
    out.ky_given_v = sym(ky - cyv * kv.inverse() * cyv.transpose());
  }
  // K_{X|U,V} from the joint covariance of (X, U, V).
  const int k = ru + rv;
  if (k == 0) {
    out.kx_given_uv = inst.kx;
    return out;
  }
  Matrix kw(k, k);
  Matrix cxw(m, k);
  // cov(X,U) = K_X P_U^T; cov(X,V) = K_Y P_V^T; cov(U,V) = P_U K_Y P_V^T.
  if (ru > 0) {
    kw.topLeftCorner(ru, ru) = ch.pu * kx * ch.pu.transpose() + ch.kzu.mat();
    cxw.leftCols(ru) = kx * ch.pu.transpose();
  }
  if (rv > 0) {
    kw.bottomRightCorner(rv, rv) = ch.pv * ky * ch.pv.transpose() + ch.kzv.mat();
    cxw.rightCols(rv) = ky * ch.pv.transpose();
  }
  if (ru > 0 && rv > 0) {
    kw.topRightCorner(ru, rv) = ch.pu * ky * ch.pv.transpose();
    kw.bottomLeftCorner(rv, ru) = kw.topRightCorner(ru, rv).transpose();
  }
  out.kx_given_uv = sym(kx - cxw * kw.inverse() * cxw.transpose());
  return out;
}

}  // namespace ohrr
