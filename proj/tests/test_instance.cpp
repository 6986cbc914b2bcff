#include <doctest.h>

#include <cmath>

#include "ohrr/instance.hpp"
#include "ohrr/matcore.hpp"
#include "test_util.hpp"

using namespace ohrr;

TEST_CASE("canonicalize: sufficient-statistic relabeling") {
  // m=1, k=1, rho = 0.7: Var(rho Y) = 0.49, K_N = 0.51.
  RawInstance raw;
  raw.m = raw.k = 1;
  raw.kx = SymMat(Matrix::Constant(1, 1, 1.0));
  raw.ky = SymMat(Matrix::Constant(1, 1, 1.0));
  raw.kxy = Matrix::Constant(1, 1, 0.7);
  raw.d = SymMat(Matrix::Constant(1, 1, 0.4));
  const CanonicalInstance inst = canonicalize(raw);
  CHECK(inst.ky(0, 0) == doctest::Approx(0.49));
  CHECK(inst.kn(0, 0) == doctest::Approx(0.51));

  // Already canonical: K_XY = K_Y (square) leaves K_Y unchanged.
  RawInstance canon;
  canon.m = canon.k = 2;
  Matrix ky(2, 2);
  ky << 0.6, 0.1, 0.1, 0.4;
  canon.ky = SymMat(ky);
  canon.kxy = ky;
  canon.kx = sym(ky + 0.3 * Matrix::Identity(2, 2));
  canon.d = SymMat(0.4 * Matrix::Identity(2, 2));
  const CanonicalInstance c2 = canonicalize(canon);
  CHECK((c2.ky.mat() - ky).norm() <= 1e-10);

  // Useless helper: K_XY = 0 gives K_N = K_X.
  RawInstance indep = canon;
  indep.kxy = Matrix::Zero(2, 2);
  const CanonicalInstance c3 = canonicalize(indep);
  CHECK(c3.ky.frobenius() <= 1e-12);
  CHECK((c3.kn.mat() - indep.kx.mat()).norm() <= 1e-12);
}

TEST_CASE("canonicalize is idempotent") {
  RawInstance raw;
  raw.m = 2;
  raw.k = 3;
  GaussianStream gs(21, 0);
  const Matrix g = testutil::random_gaussian(gs, 0, 5, 5);
  const Matrix joint = g * g.transpose() + 0.1 * Matrix::Identity(5, 5);
  raw.kx = sym(joint.topLeftCorner(2, 2));
  raw.kxy = joint.topRightCorner(2, 3);
  raw.ky = sym(joint.bottomRightCorner(3, 3));
  raw.d = SymMat(0.5 * raw.kx.mat());
  const CanonicalInstance once = canonicalize(raw);

  RawInstance again;
  again.m = again.k = 2;
  again.kx = once.kx;
  again.ky = once.ky;
  again.kxy = once.ky.mat();  // X = Y' + N with N independent of Y'
  again.d = once.d;
  const CanonicalInstance twice = canonicalize(again);
  CHECK((twice.ky.mat() - once.ky.mat()).norm() <=
        1e-7 * std::max(1.0, once.ky.frobenius()));
  CHECK((twice.kn.mat() - once.kn.mat()).norm() <= 1e-7);
}

TEST_CASE("canonicalize rejects inconsistent joints") {
  RawInstance raw;
  raw.m = raw.k = 1;
  raw.kx = SymMat(Matrix::Constant(1, 1, 1.0));
  raw.ky = SymMat(Matrix::Constant(1, 1, 1.0));
  raw.kxy = Matrix::Constant(1, 1, 1.5);  // correlation > 1
  raw.d = SymMat(Matrix::Constant(1, 1, 0.4));
  CHECK_THROWS_AS(canonicalize(raw), Error);
}

TEST_CASE("detect_trivial and assumption_check") {
  const CanonicalInstance i1 = testutil::inst1();
  CHECK_FALSE(detect_trivial(i1));
  const auto z1 = assumption_check(i1);
  REQUIRE(z1.has_value());
  CHECK(std::abs((*z1)(0)) == doctest::Approx(1.0));

  CanonicalInstance triv = i1;
  triv.d = triv.kx;
  CHECK(detect_trivial(triv));
  CHECK_FALSE(assumption_check(triv).has_value());
  triv.d = sym(2.0 * triv.kx.mat());
  CHECK(detect_trivial(triv));

  const CanonicalInstance i2 = testutil::inst2();
  const auto z2 = assumption_check(i2);
  REQUIRE(z2.has_value());
  // K_X - D = 0.5 I: any unit direction maximizes.
  CHECK(z2->norm() == doctest::Approx(1.0));
}

TEST_CASE("reduce_singular_kx") {
  // Full-rank K_X: inner is the instance itself.
  const CanonicalInstance i2 = testutil::inst2();
  const ReducedInstance full = reduce_singular_kx(i2);
  CHECK(full.status == ReductionStatus::Regular);
  CHECK(full.inner.m == 2);
  CHECK((full.lift - Matrix::Identity(2, 2)).norm() <= 1e-14);

  // Zero-padded INST1 block reduces to INST1.
  Matrix kx(2, 2), ky(2, 2), d(2, 2);
  kx << 1.0, 0.0, 0.0, 0.0;
  ky << 0.5, 0.0, 0.0, 0.0;
  d << 0.3, 0.0, 0.0, 0.1;
  CanonicalInstance padded;
  padded.m = 2;
  padded.kx = SymMat(kx);
  padded.ky = SymMat(ky);
  padded.kn = sym(kx - ky);
  padded.d = SymMat(d);
  const ReducedInstance red = reduce_singular_kx(padded);
  CHECK(red.status == ReductionStatus::Regular);
  REQUIRE(red.inner.m == 1);
  CHECK(red.inner.kx(0, 0) == doctest::Approx(1.0));
  CHECK(red.inner.ky(0, 0) == doctest::Approx(0.5));
  CHECK(red.inner.d(0, 0) == doctest::Approx(0.3));

  // Singular inner distortion: infinite rate.
  CanonicalInstance inf = padded;
  Matrix d0(2, 2);
  d0 << 0.0, 0.0, 0.0, 0.1;
  inf.d = SymMat(d0);
  CHECK(reduce_singular_kx(inf).status == ReductionStatus::InfiniteRate);

  // Trivial after reduction.
  CanonicalInstance triv = padded;
  Matrix dt(2, 2);
  dt << 1.5, 0.0, 0.0, 0.1;
  triv.d = SymMat(dt);
  CHECK(reduce_singular_kx(triv).status == ReductionStatus::TrivialQuadrant);
}

TEST_CASE("perturb_singular_ky") {
  // Rank-1 K_Y instance.
  Vector u(2);
  u << std::cos(0.5), std::sin(0.5);
  CanonicalInstance inst;
  inst.m = 2;
  inst.ky = sym(0.8 * u * u.transpose());
  Matrix kn(2, 2);
  kn << 0.5, 0.1, 0.1, 0.4;
  inst.kn = SymMat(kn);
  inst.kx = sym(inst.ky.mat() + kn);
  inst.d = SymMat(0.5 * inst.kx.mat());

  CHECK(rank_ky(inst) == 1);
  const CanonicalInstance p10 = perturb_singular_ky(inst, 10);
  const CanonicalInstance p100 = perturb_singular_ky(inst, 100);

  // Helper covariance PD, rank of the signal block preserved, monotone in n.
  CHECK(lambda_min(p10.ky) > 0.0);
  CHECK(rank_ky(p10) == 2);
  CHECK(loewner_leq(p100.ky, p10.ky));

  // The bump block scales as G/n.
  const Matrix diff10 = p10.ky.mat() - perturb_singular_ky(inst, 1000000).ky.mat();
  const Matrix diff100 = p100.ky.mat() - perturb_singular_ky(inst, 1000000).ky.mat();
  CHECK(diff10.norm() == doctest::Approx(10.0 * diff100.norm()).epsilon(1e-3));

  // Full-rank helper is rejected.
  CHECK_THROWS_AS(perturb_singular_ky(testutil::inst2(), 10), Error);
}
