#pragma once

#include "ohrr/instance.hpp"
#include "ohrr/types.hpp"

namespace ohrr {

/// Gaussian scheme parameters: K_{Y|V} = K_Y - B2, K_{X|U,V} = K_X - B1 - B2.
struct SchemeParams {
  SymMat b1;
  SymMat b2;
};

struct RatePoint {
  double r1 = 0.0;
  double r2 = 0.0;
  double v = 0.0;
  double mu = 0.0;
};

/// Explicit test channels: V = P_V Y + Z_V, U = P_U X + Z_U with fresh
/// independent noises, so U <-> X <-> Y <-> V holds by construction.
/// Rank-deficient B's give channels restricted to their ranges (P has
/// rank(B) rows; zero rows means the channel is absent).
struct TestChannels {
  Matrix pv;   // r_V x m
  SymMat kzv;  // r_V x r_V, PD (dim 0 when r_V = 0)
  Matrix pu;   // r_U x m
  SymMat kzu;  // r_U x r_U
};

/// (R1, R2) of the Gaussian scheme at (B1, B2):
/// R1 = 1/2 log2(|K_X - B2| / |K_X - B1 - B2|), R2 = 1/2 log2(|K_Y| / |K_Y - B2|).
RatePoint rates_from_b(const CanonicalInstance& inst, const SchemeParams& params,
                       double mu);

/// Scheme invariants plus the distortion constraint D >= K_X - B1 - B2.
bool feasible_for_distortion(const CanonicalInstance& inst,
                             const SchemeParams& params, const SymMat& d,
                             const TolPolicy& tol = {});

struct PtPtSolution {
  SymMat q;  // optimal K_{X|U}
  double value = 0.0;
  double barrier_residual = 0.0;
  double duality_measure = 0.0;
};

/// Point-to-point branch (mu <= 1): maximize log2|Q| over 0 <= Q <= K_X,
/// Q <= D by a log-barrier with Newton steps; value = (mu/2) log2(|K_X|/|Q|).
PtPtSolution solve_pt_pt(const CanonicalInstance& inst, double mu,
                         const TolPolicy& tol = {});

TestChannels build_test_channels(const CanonicalInstance& inst,
                                 const SchemeParams& params,
                                 const TolPolicy& tol = {});

/// Conditional covariances induced by explicit channels via Gaussian
/// conditioning on the model joint covariance (oracle for channel tests).
struct InducedConditionals {
  SymMat ky_given_v;
  SymMat kx_given_uv;
};

InducedConditionals induced_conditionals(const CanonicalInstance& inst,
                                         const TestChannels& ch);

}  // namespace ohrr
