#include "ohrr/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "ohrr/kernels.hpp"
#include "ohrr/matcore.hpp"
#include "ohrr/rng.hpp"

namespace ohrr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NatTerms {
  Matrix ai;  // (K_X - B1 - B2)^{-1}
  Matrix ci;  // (K_X - B2)^{-1}
  Matrix ei;  // (K_Y - B2)^{-1}
  bool valid = false;
};

NatTerms nat_terms(const CanonicalInstance& inst, const Matrix& b1,
                   const Matrix& b2, double dom_eps) {
  NatTerms t;
  const Matrix kx_b2 = inst.kx.mat() - b2;
  const Matrix kx_b1b2 = kx_b2 - b1;
  const Matrix ky_b2 = inst.ky.mat() - b2;
  Eigen::SelfAdjointEigenSolver<Matrix> e1(kx_b1b2, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> e2(ky_b2, Eigen::EigenvaluesOnly);
  if (e1.eigenvalues()(0) <= dom_eps || e2.eigenvalues()(0) <= dom_eps)
    return t;
  t.ai = kx_b1b2.inverse();
  t.ci = kx_b2.inverse();
  t.ei = ky_b2.inverse();
  t.valid = true;
  return t;
}

double logdet_nat_raw(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return -kInf;
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) s += std::log(llt.matrixLLT()(i, i));
  return 2.0 * s;
}

// Objective in nats; +inf outside the PD domain.
double f_nat(const CanonicalInstance& inst, const Matrix& b1, const Matrix& b2,
             double mu, double dom_eps) {
  const Matrix kx_b2 = inst.kx.mat() - b2;
  const Matrix kx_b1b2 = kx_b2 - b1;
  const Matrix ky_b2 = inst.ky.mat() - b2;
  Eigen::SelfAdjointEigenSolver<Matrix> e1(kx_b1b2, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> e2(ky_b2, Eigen::EigenvaluesOnly);
  if (e1.eigenvalues()(0) <= dom_eps || e2.eigenvalues()(0) <= dom_eps)
    return kInf;
  return 0.5 * mu * (logdet_nat_raw(kx_b2) - logdet_nat_raw(kx_b1b2)) +
         0.5 * (logdet_nat_raw(inst.ky.mat()) - logdet_nat_raw(ky_b2));
}

double inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

// ---------------------------------------------------------------------------
// Projected-gradient descent with quadratic penalty on the distortion
// constraint. B1, B2 are kept PSD by exact projection each step.
// ---------------------------------------------------------------------------

struct DescentState {
  Matrix b1;
  Matrix b2;
  double pg_measure = kInf;
};

double penalized_value(const CanonicalInstance& inst, const Matrix& b1,
                       const Matrix& b2, double mu, double rho, double dom_eps) {
  const double f = f_nat(inst, b1, b2, mu, dom_eps);
  if (!std::isfinite(f)) return kInf;
  const Matrix viol = negative_part(inst.d.mat() - inst.kx.mat() + b1 + b2);
  return f + rho * viol.squaredNorm();
}

void descend(const CanonicalInstance& inst, double mu, double rho, int iters,
             double stop_tol, double dom_eps, const SolverConfig& cfg,
             DescentState& st) {
  const Matrix slackc = inst.d.mat() - inst.kx.mat();
  double t = cfg.step_init;
  double phi = penalized_value(inst, st.b1, st.b2, mu, rho, dom_eps);
  Matrix g1_prev, g2_prev, b1_prev, b2_prev;
  bool have_prev = false;

  for (int it = 0; it < iters; ++it) {
    const NatTerms nt = nat_terms(inst, st.b1, st.b2, dom_eps);
    if (!nt.valid) break;
    const Matrix pen = 2.0 * rho * negative_part(slackc + st.b1 + st.b2);
    const Matrix g1 = 0.5 * mu * nt.ai + pen;
    const Matrix g2 = 0.5 * mu * nt.ai - 0.5 * mu * nt.ci + 0.5 * nt.ei + pen;

    if (have_prev) {
      const Matrix s1 = st.b1 - b1_prev, s2 = st.b2 - b2_prev;
      const Matrix y1 = g1 - g1_prev, y2 = g2 - g2_prev;
      const double sy = inner(s1, y1) + inner(s2, y2);
      const double ss = s1.squaredNorm() + s2.squaredNorm();
      if (sy > 1e-300 && std::isfinite(sy)) t = std::clamp(ss / sy, 1e-12, 1e8);
    }
    b1_prev = st.b1;
    b2_prev = st.b2;
    g1_prev = g1;
    g2_prev = g2;
    have_prev = true;

    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Matrix c1 = project_psd(sym(st.b1 - t * g1)).mat();
      const Matrix c2 = project_psd(sym(st.b2 - t * g2)).mat();
      const double phic = penalized_value(inst, c1, c2, mu, rho, dom_eps);
      const double decr = inner(g1, c1 - st.b1) + inner(g2, c2 - st.b2);
      if (std::isfinite(phic) && phic <= phi + cfg.armijo_c1 * decr) {
        st.pg_measure =
            ((c1 - st.b1).norm() + (c2 - st.b2).norm()) / std::max(t, 1e-300);
        st.b1 = c1;
        st.b2 = c2;
        phi = phic;
        accepted = true;
        break;
      }
      t *= cfg.armijo_shrink;
    }
    if (!accepted) break;  // stalled at this penalty resolution
    if (st.pg_measure <= stop_tol) break;
  }
}

// ---------------------------------------------------------------------------
// Feasible-phase descent: Dykstra projection onto the exact constraint set
// (B1 >= 0, B2 >= 0, B1 + B2 >= K_X - D) alternated with gradient steps on
// the unpenalized objective. Used when the penalty phase stalls far from
// stationarity; iterates stay feasible so nothing can blow up.
// ---------------------------------------------------------------------------

void dykstra_project(const Matrix& q, Matrix& b1, Matrix& b2, double scale) {
  const int m = static_cast<int>(b1.rows());
  Matrix p1 = Matrix::Zero(m, m), p2 = Matrix::Zero(m, m);
  Matrix p3a = Matrix::Zero(m, m), p3b = Matrix::Zero(m, m);
  for (int sweep = 0; sweep < 60; ++sweep) {
    {
      const Matrix y = project_psd(sym(b1 + p1)).mat();
      p1 = b1 + p1 - y;
      b1 = y;
    }
    {
      const Matrix y = project_psd(sym(b2 + p2)).mat();
      p2 = b2 + p2 - y;
      b2 = y;
    }
    {
      const Matrix a1 = b1 + p3a, a2 = b2 + p3b;
      const Matrix shift = 0.5 * negative_part(a1 + a2 - q);
      const Matrix y1 = a1 - shift, y2 = a2 - shift;
      p3a = a1 - y1;
      p3b = a2 - y2;
      b1 = y1;
      b2 = y2;
    }
    const double viol =
        std::max({-lambda_min(sym(b1)), -lambda_min(sym(b2)),
                  -lambda_min(sym(b1 + b2 - q))});
    if (viol <= 1e-13 * scale) break;
  }
  b1 = project_psd(sym(b1)).mat();
  b2 = project_psd(sym(b2)).mat();
  const Matrix cpos = positive_part(q - b1 - b2);
  if (cpos.norm() > 0.0) b1 += cpos;
}

void feasible_descent(const CanonicalInstance& inst, double mu, int iters,
                      double stop_tol, double dom_eps, const SolverConfig& cfg,
                      DescentState& st) {
  const double scale = std::max(1.0, spectral_norm(inst.kx));
  const Matrix q = inst.kx.mat() - inst.d.mat();
  double t = 1.0;
  double fval = f_nat(inst, st.b1, st.b2, mu, dom_eps);
  if (!std::isfinite(fval)) return;
  Matrix g1_prev, g2_prev, b1_prev, b2_prev;
  bool have_prev = false;

  for (int it = 0; it < iters; ++it) {
    const NatTerms nt = nat_terms(inst, st.b1, st.b2, dom_eps);
    if (!nt.valid) break;
    const Matrix g1 = 0.5 * mu * nt.ai;
    const Matrix g2 = 0.5 * mu * nt.ai - 0.5 * mu * nt.ci + 0.5 * nt.ei;

    if (have_prev) {
      const Matrix s1 = st.b1 - b1_prev, s2 = st.b2 - b2_prev;
      const Matrix y1 = g1 - g1_prev, y2 = g2 - g2_prev;
      const double sy = inner(s1, y1) + inner(s2, y2);
      const double ss = s1.squaredNorm() + s2.squaredNorm();
      if (sy > 1e-300 && std::isfinite(sy)) t = std::clamp(ss / sy, 1e-12, 1e4);
    }
    b1_prev = st.b1;
    b2_prev = st.b2;
    g1_prev = g1;
    g2_prev = g2;
    have_prev = true;

    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      Matrix c1 = st.b1 - t * g1;
      Matrix c2 = st.b2 - t * g2;
      dykstra_project(q, c1, c2, scale);
      const double fc = f_nat(inst, c1, c2, mu, dom_eps);
      const double decr = inner(g1, c1 - st.b1) + inner(g2, c2 - st.b2);
      if (std::isfinite(fc) && fc <= fval + cfg.armijo_c1 * decr) {
        st.pg_measure =
            ((c1 - st.b1).norm() + (c2 - st.b2).norm()) / std::max(t, 1e-300);
        st.b1 = c1;
        st.b2 = c2;
        fval = fc;
        accepted = true;
        break;
      }
      t *= cfg.armijo_shrink;
    }
    if (!accepted) break;
    if (st.pg_measure <= stop_tol) break;
  }
}

// ---------------------------------------------------------------------------
// Polish by root-finding on the smooth complementarity system
//   sym(B1 (g_A - Lambda)) = 0,  sym(B2 (g_B - Lambda)) = 0,
//   sym((K_X - B1 - B2 - D) Lambda) = 0,
// over the full symmetric unknowns (B1, B2, Lambda). For PSD pairs the
// symmetric product vanishing is equivalent to the product vanishing, so
// roots with the right signs are exactly the stationarity certificates;
// signs are verified before the result is accepted.
// ---------------------------------------------------------------------------

std::vector<Matrix> sym_basis(int r) {
  std::vector<Matrix> basis;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) {
      Matrix e = Matrix::Zero(r, r);
      if (i == j)
        e(i, i) = 1.0;
      else
        e(i, j) = e(j, i) = inv_sqrt2;
      basis.push_back(e);
    }
  return basis;
}

Vector svec(const Matrix& a) {
  const int r = static_cast<int>(a.rows());
  Vector v(r * (r + 1) / 2);
  int k = 0;
  const double sqrt2 = std::sqrt(2.0);
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) v(k++) = (i == j) ? a(i, i) : sqrt2 * a(i, j);
  return v;
}

// Keep the top-r eigenpairs (clipped at zero): exact rank-r PSD truncation.
Matrix rank_truncate(const Matrix& a, int r) {
  const int m = static_cast<int>(a.rows());
  if (r <= 0) return Matrix::Zero(m, m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  Matrix out = Matrix::Zero(m, m);
  for (int k = 0; k < r; ++k) {
    const int i = m - 1 - k;  // eigenvalues ascending
    const double v = std::max(es.eigenvalues()(i), 0.0);
    out += v * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
  }
  return out;
}

struct NewtonResult {
  Matrix b1;
  Matrix b2;
  Matrix lam;
  double residual = kInf;
  bool ok = false;
  bool wrong_sign = false;  // converged to a root with a negative multiplier
};

NewtonResult newton_refine(const CanonicalInstance& inst, double mu,
                           const Matrix& b1_in, const Matrix& b2_in,
                           double dom_eps) {
  NewtonResult out;
  const int m = inst.m;
  const double scale = std::max(1.0, spectral_norm(inst.kx));
  const auto bas = sym_basis(m);
  const int nb = static_cast<int>(bas.size());
  const int ntot = 3 * nb;

  Matrix b1 = b1_in;
  Matrix b2 = b2_in;
  Matrix lam = Matrix::Zero(m, m);

  struct Terms {
    NatTerms nt;
    Matrix m1c, m2c, c;
  };
  const auto eval_terms = [&](const Matrix& bb1, const Matrix& bb2,
                              const Matrix& ll, Terms& t) {
    t.nt = nat_terms(inst, bb1, bb2, dom_eps);
    if (!t.nt.valid) return false;
    t.m1c = 0.5 * mu * t.nt.ai - ll;
    t.m2c = 0.5 * mu * t.nt.ai - 0.5 * mu * t.nt.ci + 0.5 * t.nt.ei - ll;
    t.c = inst.kx.mat() - bb1 - bb2 - inst.d.mat();
    return true;
  };
  const auto residual_of = [&](const Matrix& bb1, const Matrix& bb2,
                               const Matrix& ll, const Terms& t) {
    Vector rv(ntot);
    rv.segment(0, nb) = svec(0.5 * (bb1 * t.m1c + t.m1c * bb1));
    rv.segment(nb, nb) = svec(0.5 * (bb2 * t.m2c + t.m2c * bb2));
    rv.segment(2 * nb, nb) = svec(0.5 * (t.c * ll + ll * t.c));
    return rv;
  };

  Terms tm;
  if (!eval_terms(b1, b2, lam, tm)) {
    if (std::getenv("OHRR_DEBUG")) {
      Eigen::SelfAdjointEigenSolver<Matrix> ea(
          Matrix(inst.kx.mat() - b1 - b2), Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Matrix> eb(
          Matrix(inst.ky.mat() - b2), Eigen::EigenvaluesOnly);
      std::fprintf(stderr,
                   "  newton entry invalid: lmin(KX-B1-B2)=%.3e lmin(KY-B2)=%.3e dom_eps=%.3e\n",
                   ea.eigenvalues()(0), eb.eigenvalues()(0), dom_eps);
    }
    return out;
  }

  // The system is linear in Lambda: least-squares init so the starting
  // residual reflects the true distance to stationarity.
  {
    Matrix jl(ntot, nb);
    for (int k = 0; k < nb; ++k) {
      const Matrix& hl = bas[static_cast<std::size_t>(k)];
      Vector cv(ntot);
      cv.segment(0, nb) = svec(-0.5 * (b1 * hl + hl * b1));
      cv.segment(nb, nb) = svec(-0.5 * (b2 * hl + hl * b2));
      cv.segment(2 * nb, nb) = svec(0.5 * (tm.c * hl + hl * tm.c));
      jl.col(k) = cv;
    }
    const Vector rv0 = residual_of(b1, b2, lam, tm);
    const Vector lcoef = jl.colPivHouseholderQr().solve(-rv0);
    if (lcoef.allFinite()) {
      Matrix lam_try = lam;
      for (int k = 0; k < nb; ++k)
        lam_try += lcoef(k) * bas[static_cast<std::size_t>(k)];
      Terms tt;
      if (eval_terms(b1, b2, lam_try, tt) &&
          residual_of(b1, b2, lam_try, tt).norm() < rv0.norm()) {
        lam = lam_try;
        tm = tt;
      }
    }
  }

  Vector rv = residual_of(b1, b2, lam, tm);
  double rnorm = rv.norm();
  const double rscale = std::max(1.0, (0.5 * mu * tm.nt.ai).norm());
  double prev_rnorm = -1.0;
  double ratio_est = 0.0;
  int ratio_run = 0;
  double trust = 0.1 * scale;

  for (int it = 0; it < 500 && rnorm > 1e-13 * rscale; ++it) {
    Matrix jac(ntot, ntot);
    int col = 0;
    const auto fill = [&](const Matrix& h1, const Matrix& h2,
                          const Matrix& hl) {
      const Matrix hb = h1 + h2;
      const Matrix dai = tm.nt.ai * hb * tm.nt.ai;
      const Matrix dm1 = 0.5 * mu * dai - hl;
      const Matrix dm2 = 0.5 * mu * dai -
                         0.5 * mu * (tm.nt.ci * h2 * tm.nt.ci) +
                         0.5 * (tm.nt.ei * h2 * tm.nt.ei) - hl;
      Vector cv(ntot);
      cv.segment(0, nb) =
          svec(0.5 * (h1 * tm.m1c + tm.m1c * h1 + b1 * dm1 + dm1 * b1));
      cv.segment(nb, nb) =
          svec(0.5 * (h2 * tm.m2c + tm.m2c * h2 + b2 * dm2 + dm2 * b2));
      cv.segment(2 * nb, nb) =
          svec(0.5 * (-hb * lam - lam * hb + tm.c * hl + hl * tm.c));
      jac.col(col++) = cv;
    };
    const Matrix zero = Matrix::Zero(m, m);
    for (const auto& e : bas) fill(e, zero, zero);
    for (const auto& e : bas) fill(zero, e, zero);
    for (const auto& e : bas) fill(zero, zero, e);

    const Vector delta = jac.colPivHouseholderQr().solve(-rv);
    if (std::getenv("OHRR_DEBUG_NEWTON"))
      std::fprintf(stderr, "  newton it=%d rnorm=%.3e |delta|=%.3e\n", it,
                   rnorm, delta.norm());
    if (!delta.allFinite() || delta.norm() > 1e6 * scale) break;

    // Near-singular roots contract linearly with a stable ratio; jump the
    // geometric tail with an extrapolated step when one is detected.
    if (prev_rnorm > 0.0) {
      const double r = rnorm / prev_rnorm;
      if (r > 0.3 && r < 0.995 && std::abs(r - ratio_est) < 0.05)
        ++ratio_run;
      else
        ratio_run = 0;
      ratio_est = r;
    }
    prev_rnorm = rnorm;
    double first_step = 1.0;
    if (ratio_run >= 2)
      first_step = std::min(64.0, 1.0 / (1.0 - ratio_est));
    first_step = std::min(first_step, trust / std::max(delta.norm(), 1e-300));

    double step = first_step;
    bool improved = false;
    for (int ls = 0; ls < 16; ++ls) {
      Matrix b1t = b1, b2t = b2, lamt = lam;
      int off = 0;
      for (const auto& e : bas) b1t += step * delta(off++) * e;
      for (const auto& e : bas) b2t += step * delta(off++) * e;
      for (const auto& e : bas) lamt += step * delta(off++) * e;
      Terms tt;
      if (eval_terms(b1t, b2t, lamt, tt)) {
        const Vector rvt = residual_of(b1t, b2t, lamt, tt);
        if (rvt.norm() < rnorm) {
          b1 = b1t;
          b2 = b2t;
          lam = lamt;
          tm = tt;
          rv = rvt;
          rnorm = rvt.norm();
          improved = true;
          trust = std::max(2.0 * step * delta.norm(), 1e-8 * scale);
          break;
        }
      }
      step = (ls == 0 && first_step > 1.0)
                 ? std::min(1.0, trust / std::max(delta.norm(), 1e-300))
                 : step * 0.5;
    }
    if (!improved) break;
  }

  // Sign checks: tiny negative eigenvalues are numerical dust and are
  // clipped; anything larger means a wrong-sign root.
  const double dust = 1e-8 * scale;
  if (std::getenv("OHRR_DEBUG"))
    std::fprintf(stderr,
                 "  newton end: rnorm=%.3e lmin(B1)=%.2e lmin(B2)=%.2e "
                 "lmin(L)=%.2e lmin(M1)=%.2e lmin(M2)=%.2e posC=%.2e\n",
                 rnorm, lambda_min(sym(b1)), lambda_min(sym(b2)),
                 lambda_min(sym(lam)), lambda_min(sym(tm.m1c)),
                 lambda_min(sym(tm.m2c)),
                 spectral_norm(sym(positive_part(tm.c))));
  out.lam = lam;
  const bool converged_root = rnorm <= 1e-9 * rscale;
  if (lambda_min(sym(b1)) < -dust || lambda_min(sym(b2)) < -dust) {
    out.wrong_sign = converged_root;
    return out;
  }
  if (lambda_min(sym(lam)) < -1e-6 * rscale ||
      lambda_min(sym(tm.m1c)) < -1e-6 * rscale ||
      lambda_min(sym(tm.m2c)) < -1e-6 * rscale) {
    out.wrong_sign = converged_root;
    return out;
  }
  if (spectral_norm(sym(positive_part(tm.c))) > 1e-6 * scale) return out;

  Matrix b1f = project_psd(sym(b1)).mat();
  Matrix b2f = project_psd(sym(b2)).mat();
  // Snap dust eigenvalues to exact zeros.
  const auto snap_rank = [&](const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    int r = 0;
    for (int i = 0; i < m; ++i)
      if (es.eigenvalues()(i) > dust) ++r;
    return rank_truncate(a, r);
  };
  b1f = snap_rank(b1f);
  b2f = snap_rank(b2f);
  const Matrix cpos = positive_part(inst.kx.mat() - b1f - b2f - inst.d.mat());
  if (cpos.norm() > 0.0) b1f += cpos;
  if (!nat_terms(inst, b1f, b2f, dom_eps).valid) return out;

  out.b1 = b1f;
  out.b2 = b2f;
  out.residual = rnorm;
  out.ok = true;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

double objective_pg2(const CanonicalInstance& inst, const SchemeParams& params,
                     double mu) {
  const TolPolicy tol;
  const double scale = std::max(1.0, spectral_norm(inst.kx));
  const double f = f_nat(inst, params.b1.mat(), params.b2.mat(), mu,
                         tol.eps_psd * scale);
  if (!std::isfinite(f))
    throw Error(ErrorKind::InfiniteObjective,
                "objective undefined at the feasible-set boundary");
  return f / std::numbers::ln2;
}

std::pair<SymMat, SymMat> gradient_pg2(const CanonicalInstance& inst,
                                       const SchemeParams& params, double mu) {
  const TolPolicy tol;
  const double scale = std::max(1.0, spectral_norm(inst.kx));
  const NatTerms nt = nat_terms(inst, params.b1.mat(), params.b2.mat(),
                                tol.eps_psd * scale);
  if (!nt.valid)
    throw Error(ErrorKind::InfiniteObjective,
                "gradient undefined at the feasible-set boundary");
  const double c = 1.0 / std::numbers::ln2;
  const Matrix g1 = c * 0.5 * mu * nt.ai;
  const Matrix g2 = c * (0.5 * mu * nt.ai - 0.5 * mu * nt.ci + 0.5 * nt.ei);
  return {sym(g1), sym(g2)};
}

SolverSolution solve_pg2(const CanonicalInstance& inst, double mu,
                         const SolverConfig& cfg) {
  const TolPolicy tol;
  const int m = inst.m;
  const double scale = std::max(1.0, spectral_norm(inst.kx));
  const double dom_eps = 1e-13 * scale;

  if (mu <= 1.0)
    throw Error(ErrorKind::InvalidMatrix, "solve_pg2 requires mu > 1");
  if (detect_trivial(inst, tol)) {
    SolverSolution sol;
    sol.params = {SymMat::zero(m), SymMat::zero(m)};
    sol.value = 0.0;
    sol.converged = true;
    sol.start_index = 0;
    return sol;
  }

  const double t_grid[4] = {0.1, 0.3, 0.6, 0.9};
  SolverSolution best;
  bool have_best = false;

  for (int s = 0; s < cfg.num_starts; ++s) {
    // Random PSD pair shared by four scale factors.
    const std::uint64_t pair_idx = static_cast<std::uint64_t>(s) / 4;
    const double tfac = t_grid[s % 4];
    GaussianStream gs(cfg.seed, pair_idx);
    std::vector<double> buf(static_cast<std::size_t>(m) * m);
    gs.fill_normals(0, buf.data(), m * m);
    Matrix r1m = Eigen::Map<Matrix>(buf.data(), m, m);
    gs.fill_normals(1, buf.data(), m * m);
    Matrix r2m = Eigen::Map<Matrix>(buf.data(), m, m);
    Matrix p1 = r1m * r1m.transpose();
    Matrix p2 = r2m * r2m.transpose();
    p1 /= std::max(spectral_norm(sym(p1)), 1e-12);
    p2 /= std::max(spectral_norm(sym(p2)), 1e-12);

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ga(p1 + p2, inst.kx.mat());
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gb(p2, inst.ky.mat());
    const double la = ga.eigenvalues().maxCoeff();
    const double lb = gb.eigenvalues().maxCoeff();
    const double sigma = 0.95 / std::max({la, lb, 1e-12});

    DescentState st;
    st.b1 = tfac * sigma * p1;
    st.b2 = tfac * sigma * p2;

    const int per_round = std::max(cfg.max_iters / 4, 200);
    for (const double rho : {1e3, 1e5, 1e7, 1e9})
      descend(inst, mu, rho, per_round, 1e-10 * scale, dom_eps, cfg, st);

    // Polish: exact PSD projection plus distortion repair.
    Matrix b1 = project_psd(sym(st.b1)).mat();
    Matrix b2 = project_psd(sym(st.b2)).mat();
    {
      const Matrix cpos =
          positive_part(inst.kx.mat() - b1 - b2 - inst.d.mat());
      if (cpos.norm() > 0.0) b1 += cpos;
    }
    if (!nat_terms(inst, b1, b2, dom_eps).valid) continue;

    // If the penalty phase stalled far from stationarity, continue on the
    // exact feasible set (Dykstra-projected steps on the raw objective).
    if (st.pg_measure > 1e-5 * scale) {
      DescentState fst;
      fst.b1 = b1;
      fst.b2 = b2;
      // The repair can park the iterate on the domain boundary where the
      // gradient blows up; blending toward the feasible corner
      // B1 = pos(K_X - D), B2 = 0 restores a domain margin (the feasible
      // set is convex and the corner has margin lambda_min(D)).
      {
        const Matrix corner = positive_part(inst.kx.mat() - inst.d.mat());
        const double margin = 1e-6 * scale;
        for (int blend = 0; blend < 60; ++blend) {
          Eigen::SelfAdjointEigenSolver<Matrix> ea(
              Matrix(inst.kx.mat() - fst.b1 - fst.b2 - 0.0 * corner),
              Eigen::EigenvaluesOnly);
          const Matrix dom = inst.kx.mat() - fst.b1 - fst.b2;
          Eigen::SelfAdjointEigenSolver<Matrix> ed(dom, Eigen::EigenvaluesOnly);
          if (ed.eigenvalues()(0) >= margin) break;
          fst.b1 = 0.5 * (fst.b1 + corner);
          fst.b2 = 0.5 * fst.b2;
        }
        const double f_corner =
            f_nat(inst, corner, Matrix::Zero(m, m), mu, dom_eps);
        if (std::isfinite(f_corner) &&
            f_corner < f_nat(inst, fst.b1, fst.b2, mu, dom_eps)) {
          fst.b1 = corner;
          fst.b2 = Matrix::Zero(m, m);
        }
      }
      feasible_descent(inst, mu, std::max(cfg.max_iters, 2000),
                       1e-10 * scale, dom_eps, cfg, fst);
      if (std::getenv("OHRR_DEBUG"))
        std::fprintf(stderr, "  rescue: pg=%.3e f=%.6f (was %.6f)\n",
                     fst.pg_measure,
                     f_nat(inst, fst.b1, fst.b2, mu, dom_eps),
                     f_nat(inst, b1, b2, mu, dom_eps));
      if (nat_terms(inst, fst.b1, fst.b2, dom_eps).valid &&
          f_nat(inst, fst.b1, fst.b2, mu, dom_eps) <=
              f_nat(inst, b1, b2, mu, dom_eps)) {
        b1 = fst.b1;
        b2 = fst.b2;
        st.pg_measure = fst.pg_measure;
        const Matrix cpos =
            positive_part(inst.kx.mat() - b1 - b2 - inst.d.mat());
        if (cpos.norm() > 0.0) b1 += cpos;
      }
    }

    if (std::getenv("OHRR_DEBUG")) {
      const double fv = f_nat(inst, b1, b2, mu, dom_eps) / std::numbers::ln2;
      Eigen::SelfAdjointEigenSolver<Matrix> e1(b1, Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Matrix> e2(b2, Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Matrix> ec(
          Matrix(inst.kx.mat() - b1 - b2 - inst.d.mat()),
          Eigen::EigenvaluesOnly);
      std::ostringstream os;
      os << "start " << s << ": pg=" << st.pg_measure << " f=" << fv
         << "\n  B1: " << e1.eigenvalues().transpose()
         << "  B2: " << e2.eigenvalues().transpose()
         << "  C: " << ec.eigenvalues().transpose();
      std::fprintf(stderr, "%s\n", os.str().c_str());
    }

    // Complementarity-Newton polish; accept only a converged root that
    // keeps the objective (it refines, never re-solves). A root with a
    // negative multiplier means a constraint face must be released: push
    // off that face, descend on the feasible set, and try again.
    double resid = st.pg_measure;
    for (int round = 0; round < 4; ++round) {
      const double f_old = f_nat(inst, b1, b2, mu, dom_eps);
      const double scale_r = std::max(1.0, scale);
      const NewtonResult nr = newton_refine(inst, mu, b1, b2, dom_eps);
      if (std::getenv("OHRR_DEBUG"))
        std::fprintf(stderr, "  polish round=%d ok=%d wrong_sign=%d resid=%.3e\n",
                     round, (int)nr.ok, (int)nr.wrong_sign, nr.residual);
      if (nr.ok && nr.residual <= 1e-9 * scale_r) {
        const double f_new = f_nat(inst, nr.b1, nr.b2, mu, dom_eps);
        if (std::isfinite(f_new) && f_new <= f_old + 1e-3) {
          b1 = nr.b1;
          b2 = nr.b2;
          resid = nr.residual;
        }
        break;
      }
      if (!nr.wrong_sign) break;
      // Release: walk off the distortion face along the negative
      // eigendirections of the converged multiplier, then descend.
      const EigenDecomp el = sym_eig(sym(nr.lam));
      Matrix push = Matrix::Zero(m, m);
      for (int k = 0; k < m; ++k)
        if (el.values(k) < -1e-6 * scale_r)
          push += el.vectors.col(k) * el.vectors.col(k).transpose();
      if (push.norm() == 0.0) break;
      DescentState fst;
      fst.b1 = nr.b1.size() > 0 ? nr.b1 : b1;
      fst.b2 = nr.b2.size() > 0 ? nr.b2 : b2;
      if (fst.b1.size() == 0) fst.b1 = b1;
      fst.b1 += 1e-2 * scale * push;
      Matrix dom = inst.kx.mat() - fst.b1 - fst.b2;
      for (int shrink = 0;
           shrink < 60 && lambda_min(sym(dom)) <= 1e-8 * scale; ++shrink) {
        fst.b1 -= 0.5e-2 * scale * push;
        dom = inst.kx.mat() - fst.b1 - fst.b2;
      }
      feasible_descent(inst, mu, 2000, 1e-10 * scale, dom_eps, cfg, fst);
      if (!nat_terms(inst, fst.b1, fst.b2, dom_eps).valid) break;
      b1 = fst.b1;
      b2 = fst.b2;
      {
        const Matrix cpos =
            positive_part(inst.kx.mat() - b1 - b2 - inst.d.mat());
        if (cpos.norm() > 0.0) b1 += cpos;
      }
      st.pg_measure = fst.pg_measure;
      resid = fst.pg_measure;
    }

    SolverSolution sol;
    sol.params = {sym(b1), sym(b2)};
    sol.start_index = s;
    sol.kkt_grad_residual = resid;
    const double feas1 = std::min(lambda_min(sol.params.b1), 0.0);
    const double feas2 = std::min(lambda_min(sol.params.b2), 0.0);
    const double feasd = std::min(
        lambda_min(sym(inst.d.mat() - inst.kx.mat() + b1 + b2)), 0.0);
    const bool feasible = feas1 >= -cfg.feas_tol && feas2 >= -cfg.feas_tol &&
                          feasd >= -cfg.feas_tol;
    sol.converged = feasible && resid <= cfg.grad_tol * scale;
    try {
      sol.value = objective_pg2(inst, sol.params, mu);
    } catch (const Error&) {
      continue;
    }
    if (!sol.converged) continue;
    if (!have_best || sol.value < best.value) {
      best = sol;
      have_best = true;
    }
  }

  if (!have_best)
    throw Error(ErrorKind::NoConvergedStart, "no start converged to a feasible point");
  return best;
}

// ---------------------------------------------------------------------------
// Brute-force oracles.
// ---------------------------------------------------------------------------

namespace {

OracleResult oracle_m1(const CanonicalInstance& inst, double mu, double step) {
  const double kx = inst.kx(0, 0);
  const double ky = inst.ky(0, 0);
  const double d = inst.d(0, 0);
  OracleResult res;
  res.argmin = {SymMat::zero(1), SymMat::zero(1)};
  if (kx <= d) return res;

  const double floor_pd = 1e-12;
  // Tables: A[k] = log2(kx - k*step), B[j] = log2(ky - j*step).
  std::vector<double> ta, tb;
  for (long k = 0;; ++k) {
    const double v = kx - static_cast<double>(k) * step;
    if (v <= floor_pd) break;
    ta.push_back(std::log2(v));
  }
  for (long j = 0;; ++j) {
    const double v = ky - static_cast<double>(j) * step;
    if (v <= floor_pd) break;
    tb.push_back(std::log2(v));
  }
  const long ka = static_cast<long>(ta.size()) - 1;
  const long jb = static_cast<long>(tb.size()) - 1;

  // Smallest k with k*step >= kx - d up to the clip tolerance (the same
  // eigenvalue-clip policy as the m = 2 filter; absorbs ulp noise when the
  // boundary sits on a grid point).
  const double feas_clip = 1e-9 * std::max(1.0, kx);
  long kmin = static_cast<long>(std::ceil((kx - d) / step)) - 2;
  if (kmin < 0) kmin = 0;
  while (static_cast<double>(kmin) * step < kx - d - feas_clip) ++kmin;

  const double c1 = 0.5 * mu;
  const double l2ky = std::log2(ky);
  double bestv = kInf;
  long bestj = -1;
  for (long j = 0; j <= jb; ++j) {
    const long lo = std::max(j, kmin);
    if (lo > ka) break;
    const double w = c1 * ta[static_cast<std::size_t>(j)] +
                     0.5 * (l2ky - tb[static_cast<std::size_t>(j)]);
    const double v = kernels::scan_min_affine(
        ta.data() + lo, static_cast<std::size_t>(ka - lo + 1), w, c1);
    if (v < bestv) {
      bestv = v;
      bestj = j;
    }
  }
  if (bestj < 0) {
    // Degenerate: no strictly-PD feasible grid point; fall back to the
    // active-boundary point itself.
    res.value = c1 * std::log2(kx / d);
    res.argmin = {SymMat(Matrix::Constant(1, 1, kx - d)), SymMat::zero(1)};
    return res;
  }
  // Recover the attaining i for the winning j (first match, scan order).
  long besti = -1;
  {
    const long lo = std::max(bestj, kmin);
    const double w = c1 * ta[static_cast<std::size_t>(bestj)] +
                     0.5 * (l2ky - tb[static_cast<std::size_t>(bestj)]);
    for (long k = lo; k <= ka; ++k) {
      const double v = w - c1 * ta[static_cast<std::size_t>(k)];
      if (v == bestv) {
        besti = k - bestj;
        break;
      }
    }
  }
  res.value = bestv;
  const double b2v = static_cast<double>(bestj) * step;
  const double b1v = static_cast<double>(besti) * step;
  res.argmin = {SymMat(Matrix::Constant(1, 1, b1v)),
                SymMat(Matrix::Constant(1, 1, b2v))};
  return res;
}

struct Cell {
  double value = kInf;
  double b1[3] = {0, 0, 0};  // a, offdiag, c
  double b2[3] = {0, 0, 0};
};

Matrix cell_mat(const double* p) {
  Matrix b(2, 2);
  b << p[0], p[1], p[1], p[2];
  return b;
}

// Deterministic Nelder-Mead on R^n.
Vector nelder_mead(const std::function<double(const Vector&)>& fn, Vector x0,
                   double h, int iters) {
  const int n = static_cast<int>(x0.size());
  std::vector<Vector> xs(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> fs(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i)
    xs[static_cast<std::size_t>(i) + 1](i) += h * std::max(1.0, std::abs(x0(i)));
  for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = fn(xs[i]);

  std::vector<std::size_t> ord(xs.size());
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::stable_sort(ord.begin(), ord.end(),
                     [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<Vector> xs2;
    std::vector<double> fs2;
    for (const std::size_t i : ord) {
      xs2.push_back(xs[i]);
      fs2.push_back(fs[i]);
    }
    xs = std::move(xs2);
    fs = std::move(fs2);
    if (fs[static_cast<std::size_t>(n)] - fs[0] < 1e-13 &&
        (xs[static_cast<std::size_t>(n)] - xs[0]).norm() < 1e-12)
      break;

    Vector centroid = Vector::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[static_cast<std::size_t>(i)];
    centroid /= n;
    const Vector& worst = xs[static_cast<std::size_t>(n)];
    const double fworst = fs[static_cast<std::size_t>(n)];
    const double fbest = fs[0];
    const double fsecond = fs[static_cast<std::size_t>(n) - 1];

    const Vector xr = centroid + (centroid - worst);
    const double fr = fn(xr);
    if (fr < fbest) {
      const Vector xe = centroid + 2.0 * (centroid - worst);
      const double fe = fn(xe);
      if (fe < fr) {
        xs[static_cast<std::size_t>(n)] = xe;
        fs[static_cast<std::size_t>(n)] = fe;
      } else {
        xs[static_cast<std::size_t>(n)] = xr;
        fs[static_cast<std::size_t>(n)] = fr;
      }
    } else if (fr < fsecond) {
      xs[static_cast<std::size_t>(n)] = xr;
      fs[static_cast<std::size_t>(n)] = fr;
    } else {
      const Vector xc = centroid + 0.5 * ((fr < fworst ? xr : worst) - centroid);
      const double fc = fn(xc);
      if (fc < std::min(fr, fworst)) {
        xs[static_cast<std::size_t>(n)] = xc;
        fs[static_cast<std::size_t>(n)] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          xs[static_cast<std::size_t>(i)] =
              xs[0] + 0.5 * (xs[static_cast<std::size_t>(i)] - xs[0]);
          fs[static_cast<std::size_t>(i)] = fn(xs[static_cast<std::size_t>(i)]);
        }
      }
    }
  }
  std::size_t ibest = 0;
  for (std::size_t i = 1; i < fs.size(); ++i)
    if (fs[i] < fs[ibest]) ibest = i;
  return xs[ibest];
}

OracleResult oracle_m2(const CanonicalInstance& inst, double mu) {
  const double step = 0.02;
  const double clip = 1e-9;  // eigenvalue-clip feasibility tolerance
  const double pd_floor = 1e-12;
  const Matrix kx = inst.kx.mat();
  const Matrix ky = inst.ky.mat();
  const Matrix dd = inst.d.mat();

  OracleResult res;
  res.argmin = {SymMat::zero(2), SymMat::zero(2)};
  const TolPolicy tol;
  CanonicalInstance tmp = inst;
  if (detect_trivial(tmp, tol)) return res;

  const double c1 = 0.5 * mu;
  const double l2ky = std::log2(ky.determinant());

  const long na2 = static_cast<long>(std::floor(ky(0, 0) / step));
  const long nc2 = static_cast<long>(std::floor(ky(1, 1) / step));
  const long nb2 = static_cast<long>(std::floor(std::sqrt(ky(0, 0) * ky(1, 1)) / step));
  const long na1 = static_cast<long>(std::floor(kx(0, 0) / step));
  const long nc1 = static_cast<long>(std::floor(kx(1, 1) / step));
  const long nb1 = static_cast<long>(std::floor(std::sqrt(kx(0, 0) * kx(1, 1)) / step));

  std::vector<Cell> top;  // ascending by value, size <= 10
  const auto worst_of_top = [&]() {
    return top.size() < 10 ? kInf : top.back().value;
  };
  const auto push_cell = [&](const Cell& c) {
    auto it = std::upper_bound(
        top.begin(), top.end(), c,
        [](const Cell& x, const Cell& y) { return x.value < y.value; });
    top.insert(it, c);
    if (top.size() > 10) top.pop_back();
  };

  for (long ia = 0; ia <= na2; ++ia) {
    const double a2 = static_cast<double>(ia) * step;
    for (long ic = 0; ic <= nc2; ++ic) {
      const double c2 = static_cast<double>(ic) * step;
      const double offcap2 = a2 * c2;
      for (long ib = -nb2; ib <= nb2; ++ib) {
        const double b2v = static_cast<double>(ib) * step;
        if (b2v * b2v > offcap2 + clip) continue;  // B2 not PSD
        // K_Y - B2 must be PD (finite helper rate).
        const double q11 = ky(0, 0) - a2, q22 = ky(1, 1) - c2;
        const double q12 = ky(0, 1) - b2v;
        if (q11 <= pd_floor || q22 <= pd_floor) continue;
        const double detq = q11 * q22 - q12 * q12;
        if (detq <= pd_floor) continue;
        // K_X - B2 must be PD.
        const double p11 = kx(0, 0) - a2, p22 = kx(1, 1) - c2;
        const double p12 = kx(0, 1) - b2v;
        if (p11 <= pd_floor || p22 <= pd_floor) continue;
        const double detp = p11 * p22 - p12 * p12;
        if (detp <= pd_floor) continue;

        const double w_b2 = c1 * std::log2(detp) + 0.5 * (l2ky - std::log2(detq));
        // Distortion slack without B1: M0 = D - K_X + B2.
        const double m11_0 = dd(0, 0) - kx(0, 0) + a2;
        const double m22_0 = dd(1, 1) - kx(1, 1) + c2;
        const double m12 = dd(0, 1) - kx(0, 1) + b2v;

        double det_needed =
            std::exp2((w_b2 - worst_of_top()) / c1);  // det >= this to matter
        if (!(det_needed < kInf)) det_needed = -kInf;

        for (long ja = 0; ja <= na1; ++ja) {
          const double a1 = static_cast<double>(ja) * step;
          const double pa = p11 - a1;
          if (pa <= pd_floor) break;
          const double m11 = m11_0 + a1;
          if (m11 < -clip) continue;
          for (long jc = 0; jc <= nc1; ++jc) {
            const double c1v = static_cast<double>(jc) * step;
            const double pc = p22 - c1v;
            if (pc <= pd_floor) break;
            const double m22 = m22_0 + c1v;
            if (m22 < -clip) continue;

            std::ptrdiff_t arg = -1;
            const double det = kernels::scan_max_det2(
                -static_cast<double>(nb1) * step, step,
                static_cast<std::size_t>(2 * nb1 + 1), pa * pc, p12, a1 * c1v,
                m11 * m22, m12, clip, pd_floor, &arg);
            if (arg < 0) continue;
            if (det <= det_needed) continue;
            Cell cell;
            cell.value = w_b2 - c1 * std::log2(det);
            cell.b1[0] = a1;
            cell.b1[1] = -static_cast<double>(nb1) * step +
                         static_cast<double>(arg) * step;
            cell.b1[2] = c1v;
            cell.b2[0] = a2;
            cell.b2[1] = b2v;
            cell.b2[2] = c2;
            if (cell.value < worst_of_top()) {
              push_cell(cell);
              det_needed = std::exp2((w_b2 - worst_of_top()) / c1);
            }
          }
        }
      }
    }
  }

  // Always include the analytic feasible corner B1 = pos(K_X - D), B2 = 0.
  {
    const Matrix b1c = positive_part(kx - dd);
    Cell cell;
    cell.b1[0] = b1c(0, 0);
    cell.b1[1] = b1c(0, 1);
    cell.b1[2] = b1c(1, 1);
    const double f = f_nat(inst, b1c, Matrix::Zero(2, 2), mu, pd_floor);
    cell.value = std::isfinite(f) ? f / std::numbers::ln2 : kInf;
    if (std::isfinite(cell.value)) push_cell(cell);
  }

  // Deterministic Nelder-Mead refinement from each cell, on a penalized
  // objective, followed by exact feasibility repair.
  double best = kInf;
  SchemeParams best_params{SymMat::zero(2), SymMat::zero(2)};
  if (!top.empty()) {
    best = top.front().value;
    best_params = {sym(cell_mat(top.front().b1)), sym(cell_mat(top.front().b2))};
  }

  const auto penalized = [&](const Vector& x) {
    Matrix b1(2, 2), b2(2, 2);
    b1 << x(0), x(1), x(1), x(2);
    b2 << x(3), x(4), x(4), x(5);
    const double f = f_nat(inst, b1, b2, mu, pd_floor);
    const double v1 = negative_part(b1).norm();
    const double v2 = negative_part(b2).norm();
    const double v3 = negative_part(dd - kx + b1 + b2).norm();
    if (!std::isfinite(f)) return 1e12 * (1.0 + v1 + v2 + v3);
    return f / std::numbers::ln2 + 1e8 * (v1 * v1 + v2 * v2 + v3 * v3);
  };

  for (const Cell& cell : top) {
    Vector x0(6);
    x0 << cell.b1[0], cell.b1[1], cell.b1[2], cell.b2[0], cell.b2[1], cell.b2[2];
    Vector xr = nelder_mead(penalized, x0, 0.01, 600);
    xr = nelder_mead(penalized, xr, 1e-3, 400);  // restart sharpens the corner
    Matrix b1(2, 2), b2(2, 2);
    b1 << xr(0), xr(1), xr(1), xr(2);
    b2 << xr(3), xr(4), xr(4), xr(5);
    // Exact repair: clip to PSD, then push the distortion violation into B1.
    b1 = project_psd(sym(b1)).mat();
    b2 = project_psd(sym(b2)).mat();
    const Matrix cpos = positive_part(kx - b1 - b2 - dd);
    if (cpos.norm() > 0.0) b1 += cpos;
    const double f = f_nat(inst, b1, b2, mu, pd_floor);
    if (!std::isfinite(f)) continue;
    const double fb = f / std::numbers::ln2;
    if (fb < best) {
      best = fb;
      best_params = {sym(b1), sym(b2)};
    }
  }

  res.value = best;
  res.argmin = best_params;
  return res;
}

}  // namespace

OracleResult grid_oracle_full(const CanonicalInstance& inst, double mu,
                              double resolution) {
  if (inst.m == 1) return oracle_m1(inst, mu, resolution);
  if (inst.m == 2) return oracle_m2(inst, mu);
  throw Error(ErrorKind::DimensionTooLarge, "grid oracle supports m <= 2 only");
}

double grid_oracle(const CanonicalInstance& inst, double mu, double resolution) {
  return grid_oracle_full(inst, mu, resolution).value;
}

}  // namespace ohrr
