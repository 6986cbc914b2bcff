#pragma once

#include "ohrr/achievability.hpp"
#include "ohrr/instance.hpp"

namespace ohrr {

/// PSD Lagrange multipliers for B1 >= 0, B2 >= 0 and D >= K_X - B1 - B2,
/// in the natural-log scaling of the stationarity equations.
struct KktMultipliers {
  SymMat m1;
  SymMat m2;
  SymMat lambda;
};

struct KktResiduals {
  double kkt1 = 0.0;   // ||(mu/2) A^{-1} - Lambda - M1||_F
  double kkt2 = 0.0;
  double kkt3a = 0.0;  // ||B1 M1||_F
  double kkt3b = 0.0;  // ||B2 M2||_F
  double kkt4 = 0.0;   // ||(K_X - B1 - B2 - D) Lambda||_F
  double kkt5 = 0.0;   // PSD violation of the multipliers
  double scale = 1.0;
  bool pass = false;
  double max_rel() const;
};

struct SpectralSplit {
  int r = 0;
  Matrix s;  // m x r factor, Delta = S S^T
  int p = 0;
  Vector alpha;
  Matrix a_vecs;
  int q = 0;
  Vector beta;
  Matrix b_vecs;
  bool rank_ambiguous = false;
  int r_alt = 0;  // second candidate when ambiguous, else == r
};

struct CertificateReport {
  KktMultipliers mults;
  KktResiduals residuals;
  SymMat delta;
  SpectralSplit split;
  double active_residual = 0.0;  // ||(K_X - B1 - B2 - D) S||_F
  bool pass = false;
};

/// Constrained least squares for (M1, M2, Lambda): minimize the KKT1/KKT2
/// residuals subject to PSD and support constraints (M1 on null(B1), M2 on
/// null(B2), Lambda on null(K_X - B1 - B2 - D)). Complementary slackness
/// then holds by construction.
KktMultipliers recover_multipliers(const CanonicalInstance& inst, double mu,
                                   const SchemeParams& params,
                                   const TolPolicy& tol = {});

KktResiduals check_kkt(const CanonicalInstance& inst, double mu,
                       const SchemeParams& params, const KktMultipliers& mults,
                       const TolPolicy& tol = {});

/// Delta = Lambda - (mu/2)[(K_X-B1-B2)^{-1} - (K_X-B2)^{-1}]; verifies the
/// two alternative expressions agree, Delta PSD and nonzero.
SymMat build_delta(const CanonicalInstance& inst, double mu,
                   const SchemeParams& params, const KktMultipliers& mults,
                   const TolPolicy& tol = {});

/// Ranks and spectral factors of (Delta, M1, M2); validates r + p >= m and
/// r + q >= m.
SpectralSplit spectral_split(const SymMat& delta, const SymMat& m1,
                             const SymMat& m2, const TolPolicy& tol = {});

/// ||(K_X - B1 - B2 - D) S||_F: the distortion constraint must be tight on
/// the column space of S.
double active_subspace_check(const CanonicalInstance& inst,
                             const SchemeParams& params, const Matrix& s,
                             const TolPolicy& tol = {});

/// Full certification pipeline at a candidate point.
CertificateReport certify(const CanonicalInstance& inst, double mu,
                          const SchemeParams& params, const TolPolicy& tol = {});

}  // namespace ohrr
