#pragma once

#include <optional>
#include <vector>

#include "ohrr/solver.hpp"

namespace ohrr {

enum class SolvePath { Trivial, PtPt, PG2, PG2PerturbedKy };

const char* solve_path_name(SolvePath p);

/// Theorem-4 schedule: per-n optimal values, the linear-in-1/n extrapolation
/// and the last-gap uncertainty.
struct PerturbationSchedule {
  std::vector<long> ns;
  std::vector<double> values;
  double extrapolated = 0.0;
  double uncertainty = 0.0;
};

struct DispatchResult {
  RatePoint point;
  SolvePath path = SolvePath::Trivial;
  ReductionStatus reduction = ReductionStatus::Regular;
  std::optional<SolverSolution> solution;  // PG2 path (reduced coordinates)
  std::optional<PtPtSolution> ptpt;
  std::optional<PerturbationSchedule> schedule;
  /// Scheme parameters lifted back to the original m-dimensional
  /// coordinates (identity when no reduction applied).
  std::optional<SchemeParams> params_original;
  int reduced_dim = 0;
};

/// One weighted-sum-rate evaluation with all general-case handling:
/// singular K_X reduced per Theorem 5, trivial region short-circuited,
/// mu <= 1 dispatched to the point-to-point problem, singular K_Y handled
/// by the Theorem-4 perturbation schedule n in {1e2, 1e3, 1e4}.
DispatchResult solve_dispatch(const CanonicalInstance& inst, double mu,
                              const SolverConfig& cfg = {},
                              const TolPolicy& tol = {});

/// Default grid: 25 log-spaced points in [0.1, 16] plus mu = 1 exactly.
std::vector<double> default_mu_grid();

/// Supporting-line trace over the grid. Rows keep grid order.
std::vector<RatePoint> trace_region(const CanonicalInstance& inst,
                                    const std::vector<double>& mu_grid,
                                    const SolverConfig& cfg = {},
                                    const TolPolicy& tol = {});

}  // namespace ohrr
