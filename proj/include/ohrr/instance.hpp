#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ohrr/types.hpp"

namespace ohrr {

/// One linear map applied to the problem data, recorded so downstream
/// values can be related back to the original coordinates.
struct TransformStep {
  std::string name;
  Matrix map;  // applied as x -> map * x
};

/// Raw problem data before canonicalization: X is m-dimensional, the
/// helper observation Y is k-dimensional, coupled through K_XY.
struct RawInstance {
  int m = 0;
  int k = 0;
  SymMat kx;
  SymMat ky;
  Matrix kxy;  // m x k
  SymMat d;
};

/// Canonical form X = Y + N with K_X = K_Y + K_N, all m-dimensional.
struct CanonicalInstance {
  int m = 0;
  SymMat kx;
  SymMat ky;
  SymMat kn;
  SymMat d;
  std::vector<TransformStep> transform_log;
};

enum class ReductionStatus { Regular, InfiniteRate, TrivialQuadrant };

const char* reduction_status_name(ReductionStatus s);

/// Output of the singular-K_X reduction: an inner instance of dimension
/// p = rank(K_X) plus the invertible transform that maps original
/// coordinates onto (inner, deterministic-zero) blocks.
struct ReducedInstance {
  CanonicalInstance inner;
  Matrix lift;  // invertible m x m
  ReductionStatus status = ReductionStatus::Regular;
};

/// Replace Y by its sufficient statistic A*Y (A = K_XY K_Y^+) and relabel,
/// giving X = Y' + N with N independent of Y'.
CanonicalInstance canonicalize(const RawInstance& raw, const TolPolicy& tol = {});

/// Build a canonical instance from (K_X, K_N, D) directly; K_Y = K_X - K_N.
CanonicalInstance canonical_from_kn(const SymMat& kx, const SymMat& kn,
                                    const SymMat& d, const TolPolicy& tol = {});

/// True iff K_X <= D: the rate region is the entire nonnegative quadrant.
bool detect_trivial(const CanonicalInstance& inst, const TolPolicy& tol = {});

/// Direction z with z^T K_X z > z^T D z (max eigenvector of K_X - D), or
/// nullopt when the region is trivial.
std::optional<Vector> assumption_check(const CanonicalInstance& inst,
                                       const TolPolicy& tol = {});

/// Singular-K_X reduction: congruence onto the rank-p block where the
/// transformed source is nondeterministic. Inner K_X is PD when Regular.
ReducedInstance reduce_singular_kx(const CanonicalInstance& inst,
                                   const TolPolicy& tol = {});

/// Singular-K_Y relaxation: the n-th instance of the sequence whose helper
/// covariance diag(Sigma_1, G/n) is PD and decreases with n; its optimal
/// weighted sum rate is nondecreasing in n and lower-bounds the original.
CanonicalInstance perturb_singular_ky(const CanonicalInstance& inst, long n,
                                      const TolPolicy& tol = {});

int rank_ky(const CanonicalInstance& inst, const TolPolicy& tol = {});
int rank_kx(const CanonicalInstance& inst, const TolPolicy& tol = {});

}  // namespace ohrr
