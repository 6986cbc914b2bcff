#include "ohrr/converse.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "ohrr/matcore.hpp"

namespace ohrr {

namespace {

double cond_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

// Inductive Theorem-2 construction: repeatedly pick z orthogonal to the
// accumulated columns (least-singular direction) and map it through cinv.
Matrix induction_frame(const Matrix& s, const Matrix& cmat, int count) {
  const int m = static_cast<int>(s.rows());
  Matrix cols = s;
  Matrix t(m, count);
  const Matrix cinv = cmat.inverse();
  for (int j = 0; j < count; ++j) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(cols * cols.transpose());
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(m - 1);
    if (lmin > 1e-10 * std::max(lmax, 1.0))
      throw Error(ErrorKind::ConstructionStalled,
                  "no direction orthogonal to the accumulated columns");
    const Vector z = es.eigenvectors().col(0);
    Vector tj = cinv * z;
    tj /= tj.norm();
    t.col(j) = tj;
    cols.conservativeResize(m, cols.cols() + 1);
    cols.col(cols.cols() - 1) = tj;
  }
  return t;
}

std::pair<Matrix, Vector> build_frame(const Matrix& s, const Matrix& cmat,
                                      const Matrix& vecs, const Vector& vals,
                                      int m, bool force_induction) {
  const int r = static_cast<int>(s.cols());
  if (r >= m) return {Matrix(m, 0), Vector(0)};
  const int count = m - r;
  const int rank_mult = static_cast<int>(vecs.cols());

  Matrix t;
  if (!force_induction && r + rank_mult == m) {
    // Corollary-1 shortcut: columns sqrt(alpha_i) a_i.
    t.resize(m, count);
    for (int j = 0; j < count; ++j)
      t.col(j) = std::sqrt(vals(j)) * vecs.col(j);
  } else {
    t = induction_frame(s, cmat, count);
  }
  Vector g(count);
  for (int j = 0; j < count; ++j)
    g(j) = t.col(j).dot(cmat * t.col(j));
  return {t, g};
}

}  // namespace

std::pair<Matrix, Vector> build_t(const CanonicalInstance& inst,
                                  const SchemeParams& params, const Matrix& s,
                                  const Matrix& a_vecs, const Vector& alpha,
                                  const TolPolicy& tol, bool force_induction) {
  (void)tol;
  const Matrix cmat = inst.kx.mat() - params.b2.mat();
  return build_frame(s, cmat, a_vecs, alpha, inst.m, force_induction);
}

std::pair<Matrix, Vector> build_w(const CanonicalInstance& inst,
                                  const SchemeParams& params, const Matrix& s,
                                  const Matrix& b_vecs, const Vector& beta,
                                  const TolPolicy& tol, bool force_induction) {
  (void)tol;
  const Matrix cmat = inst.ky.mat() - params.b2.mat();
  return build_frame(s, cmat, b_vecs, beta, inst.m, force_induction);
}

ProjectionBundle project(const CanonicalInstance& inst,
                         const SchemeParams& params, const KktMultipliers& mults,
                         const Matrix& s, const Matrix& t, const Matrix& w,
                         double mu, const TolPolicy& tol) {
  const int m = inst.m;
  const int r = static_cast<int>(s.cols());
  ProjectionBundle b;
  b.s = s;
  b.t = t;
  b.w = w;

  const Matrix kx = inst.kx.mat();
  const Matrix ky = inst.ky.mat();
  const Matrix kx_b2 = kx - params.b2.mat();
  const Matrix kx_b1b2 = kx_b2 - params.b1.mat();
  const Matrix ky_b2 = ky - params.b2.mat();

  if (r < m) {
    Matrix st(m, m), sw(m, m);
    st << s, t;
    sw << s, w;
    b.cond_st = cond_number(st);
    b.cond_sw = cond_number(sw);
    b.ill_conditioned = b.cond_st > 1e8 || b.cond_sw > 1e8;

    const double scale = std::max(1.0, kx.norm()) * std::max(1.0, s.norm()) *
                         std::max(1.0, std::max(t.norm(), w.norm()));
    b.orth_residual = std::max({(s.transpose() * kx_b2 * t).norm(),
                                (s.transpose() * inst.d.mat() * t).norm(),
                                (s.transpose() * kx_b1b2 * t).norm(),
                                (s.transpose() * ky * w).norm(),
                                (s.transpose() * ky_b2 * w).norm()});
    const Matrix gt = t.transpose() * kx_b2 * t;
    const Matrix gt2 = t.transpose() * kx_b1b2 * t;
    const Matrix hw = w.transpose() * ky_b2 * w;
    const Matrix hw2 = w.transpose() * ky * w;
    b.g = gt.diagonal();
    b.h = hw.diagonal();
    b.diag_residual =
        std::max({(gt - Matrix(gt.diagonal().asDiagonal())).norm(),
                  (gt2 - Matrix(gt.diagonal().asDiagonal())).norm(),
                  (hw - Matrix(hw.diagonal().asDiagonal())).norm(),
                  (hw2 - Matrix(hw.diagonal().asDiagonal())).norm()});
    if (!b.ill_conditioned &&
        (b.orth_residual > tol.eps_residual * scale ||
         b.diag_residual > tol.eps_residual * scale))
      throw Error(ErrorKind::ProjectionIdentityFailed,
                  "Theorem-2 orthogonality relations violated");
  }

  b.k_tx = sym(s.transpose() * kx * s);
  b.k_ty = sym(s.transpose() * ky * s);
  b.td = sym(s.transpose() * inst.d.mat() * s);
  b.tb1 = sym(s.transpose() * params.b1.mat() * s);
  b.tb2 = sym(s.transpose() * params.b2.mat() * s);

  const Matrix j1 = s.transpose() * kx_b2 * s;
  const Matrix j2 = s.transpose() * ky_b2 * s;
  const Matrix j1i = j1.inverse();
  const Matrix j2i = j2.inverse();
  b.tm1 = sym(j1i * s.transpose() * kx_b2 * mults.m1.mat() * kx_b2 * s * j1i);
  b.tm2 = sym(j2i * s.transpose() * ky_b2 * mults.m2.mat() * ky_b2 * s * j2i);

  // Lemma 4 identities.
  const Matrix ir = Matrix::Identity(r, r);
  const Matrix ktx_tb2 = b.k_tx.mat() - b.tb2.mat();
  const Matrix kty_tb2 = b.k_ty.mat() - b.tb2.mat();
  b.srcenh1_residual =
      std::max((ir - (0.5 * mu * ktx_tb2.inverse() - b.tm1.mat())).norm(),
               (ir - (0.5 * kty_tb2.inverse() - b.tm2.mat())).norm());
  b.srcenh2_residual = std::max((b.tb1.mat() * b.tm1.mat()).norm(),
                                (b.tb2.mat() * b.tm2.mat()).norm());
  b.srcenh3_residual =
      (b.k_tx.mat() - b.tb1.mat() - b.tb2.mat() - b.td.mat()).norm();
  const double tscale = std::max(1.0, b.k_tx.frobenius());
  if (!b.ill_conditioned) {
    if (b.srcenh1_residual > tol.eps_residual * tscale)
      throw Error(ErrorKind::ProjectionIdentityFailed, "SrcEnh1 (Lemma 4)");
    if (b.srcenh2_residual > tol.eps_residual * tscale)
      throw Error(ErrorKind::ProjectionIdentityFailed, "SrcEnh2 (Lemma 4)");
    if (b.srcenh3_residual > tol.eps_residual * tscale)
      throw Error(ErrorKind::ProjectionIdentityFailed, "SrcEnh3 (Lemma 4)");
  }

  // v(P_G2) from the full matrices and the block-diagonalized identity.
  b.v_pg2 = 0.5 * mu * (logdet2(sym(kx_b2)) - logdet2(sym(kx_b1b2))) +
            0.5 * (logdet2(inst.ky) - logdet2(sym(ky_b2)));
  const double v_tilde =
      0.5 * mu * (logdet2(sym(ktx_tb2)) - logdet2(b.td)) +
      0.5 * (logdet2(b.k_ty) - logdet2(sym(kty_tb2)));
  b.convingr9_residual = std::abs(b.v_pg2 - v_tilde);
  return b;
}

EnhancementBundle enhance(const ProjectionBundle& bundle, double mu,
                          const TolPolicy& tol) {
  const int r = bundle.k_tx.dim();
  const Matrix ir = Matrix::Identity(r, r);
  EnhancementBundle e;
  e.k_hx = sym(bundle.tb2.mat() + 0.5 * mu * ir);
  e.k_hy = sym(bundle.tb2.mat() + 0.5 * ir);
  e.hd = sym(bundle.td.mat() + e.k_hx.mat() - bundle.k_tx.mat());

  const Matrix ktx_tb2 = bundle.k_tx.mat() - bundle.tb2.mat();
  const Matrix kty_tb2 = bundle.k_ty.mat() - bundle.tb2.mat();
  const Matrix khx_tb2 = e.k_hx.mat() - bundle.tb2.mat();
  const Matrix khy_tb2 = e.k_hy.mat() - bundle.tb2.mat();

  e.r_srcenh4 = (0.5 * mu * ktx_tb2.inverse() - bundle.tm1.mat() -
                 0.5 * mu * khx_tb2.inverse())
                    .norm();
  e.r_srcenh5 =
      (0.5 * kty_tb2.inverse() - bundle.tm2.mat() - 0.5 * khy_tb2.inverse())
          .norm();
  e.r_srcenh6 = (khx_tb2 - 0.5 * mu * ir).norm();
  e.r_srcenh7 = (khy_tb2 - 0.5 * ir).norm();

  const TolPolicy order_tol = tol;
  const bool enh8 = loewner_leq(e.k_hy, e.k_hx, order_tol) &&
                    loewner_leq(bundle.k_ty, e.k_hy, order_tol) &&
                    lambda_min(bundle.k_ty) > 0.0;
  const bool enh9 = loewner_leq(bundle.k_tx, e.k_hx, order_tol) &&
                    lambda_min(bundle.k_tx) > 0.0;
  if (!enh8) throw Error(ErrorKind::EnhancementIdentityFailed, "SrcEnh8 ordering");
  if (!enh9) throw Error(ErrorKind::EnhancementIdentityFailed, "SrcEnh9 ordering");

  const double ratio_ty = std::exp2(logdet2(bundle.k_ty) - logdet2(sym(kty_tb2)));
  const double ratio_hy = std::exp2(logdet2(e.k_hy) - logdet2(sym(khy_tb2)));
  e.r_srcenh10 = std::abs(ratio_ty - ratio_hy) / std::max(ratio_ty, ratio_hy);

  const Matrix ktx_tb1b2 = ktx_tb2 - bundle.tb1.mat();
  const Matrix khx_tb1b2 = khx_tb2 - bundle.tb1.mat();
  const double ratio_tx = std::exp2(logdet2(sym(ktx_tb2)) - logdet2(sym(ktx_tb1b2)));
  const double ratio_hx = std::exp2(logdet2(sym(khx_tb2)) - logdet2(sym(khx_tb1b2)));
  e.r_srcenh11 = std::abs(ratio_tx - ratio_hx) / std::max(ratio_tx, ratio_hx);

  // K_hN = K_hX - K_hY; EPI stationarity wants K_hY - tB2 = K_hN / (mu - 1).
  const Matrix khn = e.k_hx.mat() - e.k_hy.mat();
  e.r_appeng3 = (khy_tb2 - khn / (mu - 1.0)).norm();

  const double scale = std::max(1.0, bundle.k_tx.frobenius());
  if (!bundle.ill_conditioned) {  // ill-conditioned frames only report
    if (e.r_srcenh4 > tol.eps_residual * scale)
      throw Error(ErrorKind::EnhancementIdentityFailed, "SrcEnh4");
    if (e.r_srcenh5 > tol.eps_residual * scale)
      throw Error(ErrorKind::EnhancementIdentityFailed, "SrcEnh5");
    if (e.r_srcenh10 > tol.eps_residual)
      throw Error(ErrorKind::EnhancementIdentityFailed, "SrcEnh10 det ratio");
    if (e.r_srcenh11 > tol.eps_residual)
      throw Error(ErrorKind::EnhancementIdentityFailed, "SrcEnh11 det ratio");
    if (e.r_appeng3 > tol.eps_residual * scale)
      throw Error(ErrorKind::EnhancementIdentityFailed, "AppenG3");
  }
  return e;
}

BoundReport oohama_bound(const ProjectionBundle& bundle,
                         const EnhancementBundle& enh, double mu,
                         const TolPolicy& tol) {
  BoundReport rep;
  const SymMat khx_tb2 = sym(enh.k_hx.mat() - bundle.tb2.mat());
  const SymMat khy_tb2 = sym(enh.k_hy.mat() - bundle.tb2.mat());

  rep.v_p1 = 0.5 * mu * (logdet2(enh.k_hx) - logdet2(enh.hd));
  rep.v_p2 = 0.5 * mu * (logdet2(enh.k_hx) - logdet2(khx_tb2)) -
             0.5 * (logdet2(enh.k_hy) - logdet2(khy_tb2));
  rep.lower_bound = rep.v_p1 - rep.v_p2;

  const SymMat ktx_tb2 = sym(bundle.k_tx.mat() - bundle.tb2.mat());
  const SymMat kty_tb2 = sym(bundle.k_ty.mat() - bundle.tb2.mat());
  const double oohama5 = 0.5 * mu * (logdet2(ktx_tb2) - logdet2(bundle.td)) +
                         0.5 * (logdet2(bundle.k_ty) - logdet2(kty_tb2));
  rep.oohama5_residual = std::abs(rep.lower_bound - oohama5);

  rep.v_pg2 = bundle.v_pg2;
  rep.gap = rep.v_pg2 - rep.lower_bound;
  rep.pass = std::abs(rep.gap) <= tol.eps_residual * std::max(1.0, rep.v_pg2);
  return rep;
}

double mu_le_one_bound(const CanonicalInstance& inst, double mu,
                       const TolPolicy& tol) {
  return solve_pt_pt(inst, mu, tol).value;
}

namespace {

ConverseReport pipeline_from(const CanonicalInstance& inst, double mu,
                             const SolverSolution& sol, const TolPolicy& tol) {
  ConverseReport rep;
  rep.solution = sol;
  rep.certificate = certify(inst, mu, sol.params, tol);

  const auto run_at_rank = [&](int r) {
    Matrix s = rep.certificate.split.s.leftCols(r);
    const auto [t, g] = build_t(inst, sol.params, s, rep.certificate.split.a_vecs,
                                rep.certificate.split.alpha, tol);
    const auto [w, h] = build_w(inst, sol.params, s, rep.certificate.split.b_vecs,
                                rep.certificate.split.beta, tol);
    ProjectionBundle bundle =
        project(inst, sol.params, rep.certificate.mults, s, t, w, mu, tol);
    bundle.g = g;
    bundle.h = h;
    EnhancementBundle enh = enhance(bundle, mu, tol);
    BoundReport bound = oohama_bound(bundle, enh, mu, tol);
    return std::tuple{bundle, enh, bound};
  };

  auto [bundle, enh, bound] = run_at_rank(rep.certificate.split.r);
  rep.bundle = bundle;
  rep.enhancement = enh;
  rep.bound = bound;
  if (rep.certificate.split.rank_ambiguous &&
      rep.certificate.split.r_alt != rep.certificate.split.r &&
      rep.certificate.split.r_alt > 0) {
    try {
      auto [b2, e2, bd2] = run_at_rank(rep.certificate.split.r_alt);
      rep.bound_alt_rank = bd2;
    } catch (const Error&) {
      rep.bound_alt_rank = std::nullopt;
    }
  }
  return rep;
}

}  // namespace

ConverseReport run_converse(const CanonicalInstance& inst, double mu,
                            const SolverConfig& cfg, const TolPolicy& tol) {
  if (mu <= 1.0)
    throw Error(ErrorKind::InvalidMatrix,
                "converse pipeline applies to mu > 1; use mu_le_one_bound");
  const SolverSolution sol = solve_pg2(inst, mu, cfg);
  return pipeline_from(inst, mu, sol, tol);
}

ConverseReport run_converse_at(const CanonicalInstance& inst, double mu,
                               const SchemeParams& params,
                               const TolPolicy& tol) {
  SolverSolution sol;
  sol.params = params;
  sol.value = objective_pg2(inst, params, mu);
  sol.converged = true;
  sol.start_index = -1;
  return pipeline_from(inst, mu, sol, tol);
}

}  // namespace ohrr
