#pragma once

#include <cstdint>
#include <utility>

#include "ohrr/achievability.hpp"
#include "ohrr/instance.hpp"

namespace ohrr {

struct SolverConfig {
  int num_starts = 16;
  int max_iters = 6000;
  double step_init = 1.0;
  double armijo_c1 = 1e-4;
  double armijo_shrink = 0.5;
  double feas_tol = 1e-9;
  double grad_tol = 1e-7;
  std::uint64_t seed = 1;
};

struct SolverSolution {
  SchemeParams params;
  double value = 0.0;  // bits
  bool converged = false;
  double kkt_grad_residual = 0.0;
  int start_index = -1;
};

/// P_G2 objective in bits:
/// (mu/2) log2(|K_X - B2| / |K_X - B1 - B2|) + 1/2 log2(|K_Y| / |K_Y - B2|).
double objective_pg2(const CanonicalInstance& inst, const SchemeParams& params,
                     double mu);

/// Gradient of the bits objective with respect to (B1, B2).
std::pair<SymMat, SymMat> gradient_pg2(const CanonicalInstance& inst,
                                       const SchemeParams& params, double mu);

/// Minimize P_G2 for mu > 1: multi-start projected gradient with a quadratic
/// penalty on the distortion constraint, then a polish phase (exact PSD
/// projection, distortion repair, Newton refinement on the detected active
/// manifold). Best converged start wins; ties go to the lowest start index.
SolverSolution solve_pg2(const CanonicalInstance& inst, double mu,
                         const SolverConfig& cfg = {});

struct OracleResult {
  double value = 0.0;  // bits
  SchemeParams argmin;
};

/// Brute-force oracle, m <= 2 only. m = 1: exhaustive scan of (b1, b2) at
/// the given resolution. m = 2: coarse scan of the 6 symmetric-matrix
/// parameters at step 0.02 with an eigenvalue-clip feasibility filter,
/// then deterministic Nelder-Mead refinement from the best 10 cells.
OracleResult grid_oracle_full(const CanonicalInstance& inst, double mu,
                              double resolution = 1e-4);

double grid_oracle(const CanonicalInstance& inst, double mu,
                   double resolution = 1e-4);

}  // namespace ohrr
