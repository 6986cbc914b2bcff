#include "ohrr/region.hpp"

#include <algorithm>
#include <cmath>

#include "ohrr/matcore.hpp"

namespace ohrr {

const char* solve_path_name(SolvePath p) {
  switch (p) {
    case SolvePath::Trivial: return "trivial";
    case SolvePath::PtPt: return "pt-pt";
    case SolvePath::PG2: return "pg2";
    case SolvePath::PG2PerturbedKy: return "pg2-perturbed-ky";
  }
  return "unknown";
}

namespace {

SchemeParams lift_params(const SchemeParams& inner, const Matrix& lift, int m) {
  const int p = inner.b1.dim();
  if (p == m && lift.isIdentity(1e-14)) return inner;
  // Transformed coordinates: B_bar = diag(B_inner, 0); original
  // B = T^{-1} B_bar T^{-T} (covariances conjugate by the inverse map).
  const Matrix tinv = lift.inverse();
  Matrix pad1 = Matrix::Zero(m, m), pad2 = Matrix::Zero(m, m);
  pad1.topLeftCorner(p, p) = inner.b1.mat();
  pad2.topLeftCorner(p, p) = inner.b2.mat();
  return {sym(tinv * pad1 * tinv.transpose()),
          sym(tinv * pad2 * tinv.transpose())};
}

}  // namespace

DispatchResult solve_dispatch(const CanonicalInstance& inst, double mu,
                              const SolverConfig& cfg, const TolPolicy& tol) {
  if (mu < 0.0)
    throw Error(ErrorKind::InvalidMatrix, "mu must be nonnegative");

  DispatchResult out;
  out.point.mu = mu;

  const ReducedInstance red = reduce_singular_kx(inst, tol);
  out.reduction = red.status;
  out.reduced_dim = red.inner.m;
  if (red.status == ReductionStatus::TrivialQuadrant) {
    out.path = SolvePath::Trivial;
    out.params_original = SchemeParams{SymMat::zero(inst.m), SymMat::zero(inst.m)};
    return out;
  }
  if (red.status == ReductionStatus::InfiniteRate)
    throw Error(ErrorKind::InfiniteRate,
                "distortion block singular on the effective source; the rate "
                "region is empty");

  const CanonicalInstance& work = red.inner;

  if (mu <= 1.0) {
    out.path = SolvePath::PtPt;
    const PtPtSolution sol = solve_pt_pt(work, mu, tol);
    out.ptpt = sol;
    out.point.r1 = 0.5 * (logdet2(work.kx) - logdet2(sol.q));
    out.point.r2 = 0.0;
    out.point.v = mu * out.point.r1;
    const SchemeParams inner{sym(work.kx.mat() - sol.q.mat()), SymMat::zero(work.m)};
    out.params_original = lift_params(inner, red.lift, inst.m);
    return out;
  }

  const int p_ky = rank_ky(work, tol);
  if (p_ky < work.m) {
    out.path = SolvePath::PG2PerturbedKy;
    PerturbationSchedule sch;
    sch.ns = {100, 1000, 10000};
    SolverSolution last;
    for (const long n : sch.ns) {
      const CanonicalInstance pert = perturb_singular_ky(work, n, tol);
      last = solve_pg2(pert, mu, cfg);
      sch.values.push_back(last.value);
    }
    // Linear extrapolation in 1/n from the last two solves.
    const double x1 = 1.0 / static_cast<double>(sch.ns[sch.ns.size() - 2]);
    const double x2 = 1.0 / static_cast<double>(sch.ns.back());
    const double y1 = sch.values[sch.values.size() - 2];
    const double y2 = sch.values.back();
    const double slope = (y2 - y1) / (x2 - x1);
    sch.extrapolated = y2 - slope * x2;
    sch.uncertainty = std::abs(y2 - y1);
    out.schedule = sch;
    out.solution = last;
    const CanonicalInstance pert = perturb_singular_ky(work, sch.ns.back(), tol);
    const RatePoint rp = rates_from_b(pert, last.params, mu);
    out.point.r1 = rp.r1;
    out.point.r2 = rp.r2;
    out.point.v = sch.extrapolated;
    return out;
  }

  out.path = SolvePath::PG2;
  const SolverSolution sol = solve_pg2(work, mu, cfg);
  out.solution = sol;
  const RatePoint rp = rates_from_b(work, sol.params, mu);
  out.point = rp;
  out.params_original = lift_params(sol.params, red.lift, inst.m);
  return out;
}

std::vector<double> default_mu_grid() {
  std::vector<double> grid;
  const double lo = std::log(0.1), hi = std::log(16.0);
  for (int i = 0; i < 25; ++i)
    grid.push_back(std::exp(lo + (hi - lo) * i / 24.0));
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  return grid;
}

std::vector<RatePoint> trace_region(const CanonicalInstance& inst,
                                    const std::vector<double>& mu_grid,
                                    const SolverConfig& cfg,
                                    const TolPolicy& tol) {
  std::vector<RatePoint> pts;
  pts.reserve(mu_grid.size());
  for (const double mu : mu_grid)
    pts.push_back(solve_dispatch(inst, mu, cfg, tol).point);
  return pts;
}

}  // namespace ohrr
