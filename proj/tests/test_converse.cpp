#include <doctest.h>

#include <cmath>

#include "ohrr/converse.hpp"
#include "ohrr/matcore.hpp"
#include "test_util.hpp"

using namespace ohrr;

namespace {

// m = 2 instance whose second coordinate is trivially distorted: the
// optimal Delta has rank 1, so the projection stage genuinely projects.
CanonicalInstance projecting_instance() {
  Matrix kx(2, 2), kn(2, 2), d(2, 2);
  kx << 1.0, 0.0, 0.0, 0.5;
  kn << 0.5, 0.0, 0.0, 0.2;
  d << 0.3, 0.0, 0.0, 0.6;
  return canonical_from_kn(SymMat(kx), SymMat(kn), SymMat(d));
}

}  // namespace

TEST_CASE("full pipeline at r = m (no projection needed)") {
  const CanonicalInstance i2 = testutil::inst2();
  const ConverseReport rep = run_converse(i2, 3.0);
  CHECK(rep.certificate.split.r == 2);
  CHECK(rep.bundle.t.cols() == 0);
  CHECK(rep.bundle.w.cols() == 0);
  // Square S: the projection is a congruence and reproduces v(P_G2).
  CHECK(rep.bundle.convingr9_residual <= 1e-8);
  CHECK(std::abs(rep.bound.gap) <= 1e-5 * std::max(1.0, rep.bound.v_pg2));
  CHECK(rep.bound.pass);
  // No enhancement needed when both multipliers vanish.
  CHECK(rep.certificate.split.p == 0);
  CHECK(rep.certificate.split.q == 0);
  CHECK((rep.enhancement.k_hx.mat() - rep.bundle.k_tx.mat()).norm() <= 1e-6);
  CHECK((rep.enhancement.k_hy.mat() - rep.bundle.k_ty.mat()).norm() <= 1e-6);
  CHECK((rep.enhancement.hd.mat() - rep.bundle.td.mat()).norm() <= 1e-6);
}

TEST_CASE("scalar pipeline (INST1) and the mu <= 1 branch") {
  const CanonicalInstance i1 = testutil::inst1();
  const ConverseReport rep = run_converse(i1, 2.0);
  CHECK(rep.certificate.split.r == 1);
  CHECK(std::abs(rep.bound.lower_bound - rep.solution.value) <= 1e-6);
  CHECK(rep.bound.pass);

  CHECK(mu_le_one_bound(i1, 0.0) == doctest::Approx(0.0));
  const double v1 = mu_le_one_bound(i1, 1.0);
  const double v1p = run_converse(i1, 1.001).solution.value;
  CHECK(std::abs(v1 - v1p) <= 1e-3);

  // The bound never beats a feasible Gaussian scheme for mu in [0, 1].
  GaussianStream gs(51, 0);
  const double mu = 0.7;
  const double bound = mu_le_one_bound(i1, mu);
  for (int rep_i = 0; rep_i < 50; ++rep_i) {
    SchemeParams sp = testutil::random_interior_params(i1, gs, rep_i, 0.3);
    // Repair to distortion feasibility.
    const Matrix cpos = positive_part(i1.kx.mat() - sp.b1.mat() -
                                      sp.b2.mat() - i1.d.mat());
    sp.b1 = sym(sp.b1.mat() + cpos);
    const RatePoint pt = rates_from_b(i1, sp, mu);
    CHECK(pt.v >= bound - 1e-9);
  }
}

TEST_CASE("distortion projection: r < m pipeline") {
  const CanonicalInstance inst = projecting_instance();
  const ConverseReport rep = run_converse(inst, 2.0);
  CHECK(rep.certificate.split.r == 1);
  CHECK(rep.certificate.split.p == 1);
  CHECK(rep.certificate.split.q == 1);
  CHECK(rep.bundle.t.cols() == 1);
  CHECK(rep.bundle.w.cols() == 1);
  CHECK_FALSE(rep.bundle.ill_conditioned);
  CHECK(rep.bundle.srcenh1_residual <= 1e-6);
  CHECK(rep.bundle.srcenh2_residual <= 1e-6);
  CHECK(rep.bundle.srcenh3_residual <= 1e-6);
  CHECK(rep.bound.pass);

  // Corollary-1 shortcut: [S,T]^T (K_X - B2) [S,T] = (mu/2) I.
  Matrix st(2, 2);
  st << rep.bundle.s, rep.bundle.t;
  const Matrix kx_b2 = inst.kx.mat() - rep.solution.params.b2.mat();
  const Matrix corr3 = st.transpose() * kx_b2 * st;
  CHECK((corr3 - Matrix::Identity(2, 2)).norm() <= 1e-8);

  // W analog: W^T K_Y W = W^T (K_Y - B2) W since B2 W = 0.
  const Matrix w = rep.bundle.w;
  const Matrix lhs = w.transpose() * inst.ky.mat() * w;
  const Matrix rhs =
      w.transpose() * (inst.ky.mat() - rep.solution.params.b2.mat()) * w;
  CHECK((lhs - rhs).norm() <= 1e-9);
}

TEST_CASE("shortcut and inductive constructions both satisfy the frame laws") {
  const CanonicalInstance inst = projecting_instance();
  const ConverseReport rep = run_converse(inst, 2.0);
  const auto& split = rep.certificate.split;
  const Matrix s = split.s;

  for (const bool force : {false, true}) {
    const auto [t, g] =
        build_t(inst, rep.solution.params, s, split.a_vecs, split.alpha, {},
                force);
    const auto [w, h] =
        build_w(inst, rep.solution.params, s, split.b_vecs, split.beta, {},
                force);
    REQUIRE(t.cols() == 1);
    REQUIRE(w.cols() == 1);
    const ProjectionBundle bundle = project(
        inst, rep.solution.params, rep.certificate.mults, s, t, w, 2.0);
    CHECK(bundle.orth_residual <= 1e-7);
    const EnhancementBundle enh = enhance(bundle, 2.0);
    const BoundReport bound = oohama_bound(bundle, enh, 2.0);
    CHECK(bound.pass);
  }
}

TEST_CASE("single induction step spans the predicted direction") {
  // Synthetic rank-1 S with known null direction e2: the first induction
  // step must produce t parallel to (K_X - B2)^{-1} e2.
  const CanonicalInstance inst = projecting_instance();
  Matrix s(2, 1);
  s << 1.0, 0.0;
  const SchemeParams sp{SymMat::zero(2),
                        SymMat(0.1 * Matrix::Identity(2, 2))};
  const Matrix a_vecs = Matrix::Identity(2, 2);  // span{a_i} = everything
  Vector alpha(2);
  alpha << 1.0, 1.0;
  const auto [t, g] = build_t(inst, sp, s, a_vecs, alpha, {}, true);
  REQUIRE(t.cols() == 1);
  Vector predicted = (inst.kx.mat() - sp.b2.mat()).inverse() * Vector::Unit(2, 1);
  predicted /= predicted.norm();
  CHECK(std::abs(std::abs(predicted.dot(t.col(0))) - 1.0) <= 1e-12);
  CHECK(g(0) == doctest::Approx(t.col(0).dot(
                    (inst.kx.mat() - sp.b2.mat()) * t.col(0))));
}

TEST_CASE("enhancement identities at mu = 2") {
  const CanonicalInstance inst = projecting_instance();
  const ConverseReport rep = run_converse(inst, 2.0);
  // K_hX - K_hY = ((mu-1)/2) I = I/2 exactly by construction.
  const Matrix diff = rep.enhancement.k_hx.mat() - rep.enhancement.k_hy.mat();
  CHECK((diff - 0.5 * Matrix::Identity(1, 1)).norm() == 0.0);
  CHECK(rep.enhancement.r_srcenh6 == 0.0);
  CHECK(rep.enhancement.r_srcenh7 == 0.0);
  CHECK(rep.enhancement.r_appeng3 <= 1e-15);
  CHECK(rep.enhancement.r_srcenh10 <= 1e-8);
  CHECK(rep.enhancement.r_srcenh11 <= 1e-8);
}

TEST_CASE("oohama_bound rejects a degenerate distortion block") {
  ProjectionBundle bundle;
  bundle.k_tx = SymMat(Matrix::Constant(1, 1, 1.0));
  bundle.k_ty = SymMat(Matrix::Constant(1, 1, 0.5));
  bundle.td = SymMat::zero(1);
  bundle.tb1 = SymMat(Matrix::Constant(1, 1, 0.2));
  bundle.tb2 = SymMat::zero(1);
  bundle.tm1 = SymMat::zero(1);
  bundle.tm2 = SymMat::zero(1);
  EnhancementBundle enh;
  enh.k_hx = SymMat(Matrix::Constant(1, 1, 1.0));
  enh.k_hy = SymMat(Matrix::Constant(1, 1, 0.5));
  enh.hd = SymMat::zero(1);  // log of a zero determinant
  CHECK_THROWS_AS(oohama_bound(bundle, enh, 2.0), Error);
}

TEST_CASE("bound report flags a genuine gap") {
  const CanonicalInstance i2 = testutil::inst2();
  ConverseReport rep = run_converse(i2, 3.0);
  ProjectionBundle doctored = rep.bundle;
  doctored.v_pg2 += 0.01;  // fabricated mismatch
  const BoundReport bad = oohama_bound(doctored, rep.enhancement, 3.0);
  CHECK_FALSE(bad.pass);
  CHECK(std::abs(bad.gap - 0.01) <= 1e-6);
}

TEST_CASE("end-to-end equality on random scalar instances") {
  GaussianStream gs(52, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const double ky = 0.15 + 0.7 * gs.uniform(3 * rep);
    const double kn = 0.15 + 0.7 * gs.uniform(3 * rep + 1);
    const double d = (0.25 + 0.5 * gs.uniform(3 * rep + 2)) * (ky + kn);
    const CanonicalInstance inst =
        canonical_from_kn(SymMat(Matrix::Constant(1, 1, ky + kn)),
                          SymMat(Matrix::Constant(1, 1, kn)),
                          SymMat(Matrix::Constant(1, 1, d)));
    const double mu = (rep % 2) ? 1.5 : 4.0;
    const ConverseReport r = run_converse(inst, mu);
    CHECK(std::abs(r.bound.gap) <= 1e-5 * std::max(1.0, r.bound.v_pg2));
    CHECK(r.bound.oohama5_residual <= 1e-8);
  }
}
