#pragma once

#include <optional>

#include "ohrr/certificate.hpp"
#include "ohrr/solver.hpp"

namespace ohrr {

/// Projection stage output: the tilde problem on the column space of S,
/// the complement frames T (for K_X - B2) and W (for K_Y), and the
/// identity residuals the stage must satisfy.
struct ProjectionBundle {
  Matrix s;  // m x r
  Matrix t;  // m x (m-r), empty when r = m
  Matrix w;  // m x (m-r)
  Vector g;  // diagonal of T^T (K_X - B2) T
  Vector h;  // diagonal of W^T (K_Y - B2) W
  SymMat k_tx, k_ty, td, tb1, tb2, tm1, tm2;  // r x r

  double cond_st = 1.0;
  double cond_sw = 1.0;
  bool ill_conditioned = false;

  double orth_residual = 0.0;     // worst S/T/W cross-orthogonality defect
  double diag_residual = 0.0;     // off-diagonal mass of G and H blocks
  double srcenh1_residual = 0.0;  // I = (mu/2)(K_tX-tB2)^{-1} - tM1 = ...
  double srcenh2_residual = 0.0;  // tB_i tM_i = 0
  double srcenh3_residual = 0.0;  // K_tX - tB1 - tB2 = tD
  double convingr9_residual = 0.0;
  double v_pg2 = 0.0;  // bits, from the full-size matrices
};

struct EnhancementBundle {
  SymMat k_hx, k_hy, hd;  // r x r
  double r_srcenh4 = 0.0;
  double r_srcenh5 = 0.0;
  double r_srcenh6 = 0.0;
  double r_srcenh7 = 0.0;
  double r_srcenh10 = 0.0;  // relative det-ratio defects
  double r_srcenh11 = 0.0;
  double r_appeng3 = 0.0;
};

struct BoundReport {
  double v_p1 = 0.0;
  double v_p2 = 0.0;
  double lower_bound = 0.0;
  double v_pg2 = 0.0;
  double gap = 0.0;
  double oohama5_residual = 0.0;
  bool pass = false;
};

/// Theorem-2 frame for the X side. Empty T when r = m (no projection
/// needed). Uses the Corollary-1 shortcut T = [sqrt(alpha_i) a_i] when
/// r + p = m, otherwise the inductive construction.
std::pair<Matrix, Vector> build_t(const CanonicalInstance& inst,
                                  const SchemeParams& params, const Matrix& s,
                                  const Matrix& a_vecs, const Vector& alpha,
                                  const TolPolicy& tol = {},
                                  bool force_induction = false);

/// Theorem-2 frame for the Y side (K_Y - B2 based).
std::pair<Matrix, Vector> build_w(const CanonicalInstance& inst,
                                  const SchemeParams& params, const Matrix& s,
                                  const Matrix& b_vecs, const Vector& beta,
                                  const TolPolicy& tol = {},
                                  bool force_induction = false);

/// Distortion projection onto span(S), including the Lemma-4 identities.
ProjectionBundle project(const CanonicalInstance& inst,
                         const SchemeParams& params, const KktMultipliers& mults,
                         const Matrix& s, const Matrix& t, const Matrix& w,
                         double mu, const TolPolicy& tol = {});

/// Source enhancement K_hX = tB2 + (mu/2) I, K_hY = tB2 + (1/2) I,
/// hD = tD + (K_hX - K_tX), with all Lemma-5 identities verified.
EnhancementBundle enhance(const ProjectionBundle& bundle, double mu,
                          const TolPolicy& tol = {});

/// Oohama decomposition closed forms and bound assembly; the lower bound
/// must reproduce v(P_G2).
BoundReport oohama_bound(const ProjectionBundle& bundle,
                         const EnhancementBundle& enh, double mu,
                         const TolPolicy& tol = {});

/// mu <= 1 branch of the converse: v(P_pt-pt).
double mu_le_one_bound(const CanonicalInstance& inst, double mu,
                       const TolPolicy& tol = {});

/// Full pipeline: solve -> certify -> project -> enhance -> bound.
struct ConverseReport {
  SolverSolution solution;
  CertificateReport certificate;
  ProjectionBundle bundle;
  EnhancementBundle enhancement;
  BoundReport bound;
  /// Populated when the Delta rank threshold was ambiguous: the same
  /// pipeline evaluated at the alternate rank.
  std::optional<BoundReport> bound_alt_rank;
};

ConverseReport run_converse(const CanonicalInstance& inst, double mu,
                            const SolverConfig& cfg = {},
                            const TolPolicy& tol = {});

/// Pipeline from a given stationary point (used to certify oracle points).
ConverseReport run_converse_at(const CanonicalInstance& inst, double mu,
                               const SchemeParams& params,
                               const TolPolicy& tol = {});

}  // namespace ohrr
