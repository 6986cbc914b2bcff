#pragma once

#include <cstdint>
#include <vector>

#include "ohrr/achievability.hpp"
#include "ohrr/instance.hpp"

namespace ohrr {

struct SimConfig {
  long num_samples = 200000;
  std::uint64_t seed = 1;
  long chunk_size = 4096;
};

struct DirectionalSlack {
  Vector direction;
  double slack = 0.0;  // z^T D z - z^T Sigma_hat z
  double stderr_ = 0.0;
};

struct SampleCovs {
  SymMat y;
  SymMat y_given_v;
  SymMat x_given_v;
  SymMat x_given_uv;  // empirical error covariance of the MMSE estimate
  long n = 0;
};

struct SimReport {
  SymMat emp_err_cov;
  std::vector<DirectionalSlack> directional_slack;
  SymMat emp_ky_given_v;
  SymMat emp_kx_given_uv;
  double r1_emp = 0.0;
  double r2_emp = 0.0;
  bool pass = false;
  SampleCovs covs;
  // Orthogonality principle diagnostics: correlation of the error with
  // (U, V) and its per-entry standard errors.
  Matrix err_uv_corr;
  Matrix err_uv_stderr;
};

/// Sample (Y, N), form X = Y + N, push through the test channels, decode
/// with the analytic linear MMSE estimator, and compare the empirical error
/// covariance against D (3-sigma directional test) and the analytic
/// conditional covariances (5-sigma entrywise; mismatch throws
/// ChannelModelMismatch). Deterministic in (seed, config, instance);
/// accumulation is chunked and independent of chunk completion order.
SimReport simulate_scheme(const CanonicalInstance& inst, const TestChannels& ch,
                          const SymMat& d, const SimConfig& cfg);

/// Test hook: process chunks in the given order (must be a permutation of
/// 0..num_chunks-1). Results are identical to simulate_scheme.
SimReport simulate_scheme_ordered(const CanonicalInstance& inst,
                                  const TestChannels& ch, const SymMat& d,
                                  const SimConfig& cfg,
                                  const std::vector<long>& chunk_order);

/// Gaussian mutual-information formulas applied to sample covariances:
/// R2 = 1/2 log2(|S_Y| / |S_{Y|V}|), R1 = 1/2 log2(|S_{X|V}| / |S_{X|U,V}|).
std::pair<double, double> empirical_rates(const SampleCovs& covs);

}  // namespace ohrr
