#include <doctest.h>

#include <cmath>

#include "ohrr/achievability.hpp"
#include "ohrr/matcore.hpp"
#include "ohrr/region.hpp"
#include "ohrr/solver.hpp"
#include "test_util.hpp"

using namespace ohrr;

TEST_CASE("rates_from_b examples and invariants") {
  const CanonicalInstance i1 = testutil::inst1();
  const SchemeParams zero{SymMat::zero(1), SymMat::zero(1)};
  const RatePoint p0 = rates_from_b(i1, zero, 2.0);
  CHECK(p0.r1 == doctest::Approx(0.0));
  CHECK(p0.r2 == doctest::Approx(0.0));

  const SchemeParams p23{SymMat(Matrix::Constant(1, 1, 0.2)),
                         SymMat(Matrix::Constant(1, 1, 0.3))};
  const RatePoint pt = rates_from_b(i1, p23, 2.0);
  CHECK(pt.r1 == doctest::Approx(0.5 * std::log2(0.7 / 0.5)));
  CHECK(pt.r2 == doctest::Approx(0.5 * std::log2(0.5 / 0.2)));
  CHECK(pt.v == doctest::Approx(2.0 * pt.r1 + pt.r2));

  // Singular K_X - B1 - B2 is an infinite rate.
  const SchemeParams sing{SymMat(Matrix::Constant(1, 1, 0.7)),
                          SymMat(Matrix::Constant(1, 1, 0.3))};
  CHECK_THROWS_AS(rates_from_b(i1, sing, 2.0), Error);

  // v = mu R1 + R2 and nonnegativity on random feasible params.
  const CanonicalInstance i2 = testutil::inst2();
  GaussianStream gs(31, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const SchemeParams sp = testutil::random_interior_params(i2, gs, rep);
    const double mu = 1.0 + 4.0 * gs.uniform(rep);
    const RatePoint rp = rates_from_b(i2, sp, mu);
    CHECK(rp.r1 >= 0.0);
    CHECK(rp.r2 >= 0.0);
    CHECK(std::abs(rp.v - (mu * rp.r1 + rp.r2)) <=
          1e-12 * std::max(1.0, std::abs(rp.v)));
  }
}

TEST_CASE("feasible_for_distortion") {
  const CanonicalInstance i1 = testutil::inst1();
  // B1 + B2 = K_X - D meets the constraint with equality.
  const SchemeParams eq{SymMat(Matrix::Constant(1, 1, 0.4)),
                        SymMat(Matrix::Constant(1, 1, 0.3))};
  CHECK(feasible_for_distortion(i1, eq, i1.d));

  const SchemeParams zero{SymMat::zero(1), SymMat::zero(1)};
  CHECK_FALSE(feasible_for_distortion(i1, zero, i1.d));

  // B2 beyond K_Y is infeasible regardless of the distortion.
  const SchemeParams big_b2{SymMat::zero(1), SymMat(Matrix::Constant(1, 1, 0.6))};
  CHECK_FALSE(feasible_for_distortion(i1, big_b2, i1.d));
}

TEST_CASE("solve_pt_pt") {
  const CanonicalInstance i1 = testutil::inst1();
  SUBCASE("mu = 0 has value 0") {
    CHECK(solve_pt_pt(i1, 0.0).value == doctest::Approx(0.0));
  }
  SUBCASE("scalar: Q = min(K_X, D)") {
    const PtPtSolution s = solve_pt_pt(i1, 1.0);
    CHECK(s.q(0, 0) == doctest::Approx(0.3).epsilon(1e-7));
    CHECK(s.value == doctest::Approx(0.5 * std::log2(1.0 / 0.3)).epsilon(1e-8));
    CHECK(s.barrier_residual <= 1e-6);
    CHECK(s.duality_measure <= 1e-10);
  }
  SUBCASE("simultaneously diagonal: Q = min per coordinate") {
    Matrix kx(2, 2), d(2, 2);
    kx << 1.0, 0.0, 0.0, 0.5;
    d << 0.4, 0.0, 0.0, 0.8;
    CanonicalInstance inst;
    inst.m = 2;
    inst.kx = SymMat(kx);
    inst.ky = SymMat(0.5 * kx);
    inst.kn = SymMat(0.5 * kx);
    inst.d = SymMat(d);
    const PtPtSolution s = solve_pt_pt(inst, 0.7);
    CHECK(s.q(0, 0) == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(s.q(1, 1) == doctest::Approx(0.5).epsilon(1e-6));
    // Both Loewner constraints hold.
    CHECK(loewner_leq(s.q, inst.kx));
    CHECK(loewner_leq(s.q, inst.d));
  }
  SUBCASE("singular D is an infeasible distortion") {
    CanonicalInstance inst = testutil::inst2();
    Matrix d0(2, 2);
    d0 << 0.5, 0.0, 0.0, 0.0;
    inst.d = SymMat(d0);
    CHECK_THROWS_AS(solve_pt_pt(inst, 0.5), Error);
  }
}

TEST_CASE("build_test_channels") {
  const CanonicalInstance i1 = testutil::inst1();
  SUBCASE("empty channels for zero B") {
    CanonicalInstance loose = i1;
    loose.d = SymMat(Matrix::Constant(1, 1, 1.0));
    const SchemeParams zero{SymMat::zero(1), SymMat::zero(1)};
    const TestChannels ch = build_test_channels(loose, zero);
    CHECK(ch.pv.rows() == 0);
    CHECK(ch.pu.rows() == 0);
    const InducedConditionals ind = induced_conditionals(loose, ch);
    CHECK((ind.kx_given_uv.mat() - loose.kx.mat()).norm() <= 1e-14);
  }
  SUBCASE("B1 = 0 leaves only the helper channel") {
    const SchemeParams sp{SymMat::zero(1), SymMat(Matrix::Constant(1, 1, 0.2))};
    const TestChannels ch = build_test_channels(i1, sp);
    CHECK(ch.pu.rows() == 0);
    CHECK(ch.pv.rows() == 1);
    const InducedConditionals ind = induced_conditionals(i1, ch);
    CHECK(ind.kx_given_uv(0, 0) == doctest::Approx(0.8).epsilon(1e-10));
  }
  SUBCASE("INST1 optimum hits its targets to 1e-8") {
    const SolverSolution sol = solve_pg2(i1, 2.0);
    const TestChannels ch = build_test_channels(i1, sol.params);
    const InducedConditionals ind = induced_conditionals(i1, ch);
    CHECK(std::abs(ind.ky_given_v(0, 0) -
                   (i1.ky(0, 0) - sol.params.b2(0, 0))) <= 1e-8);
    CHECK(std::abs(ind.kx_given_uv(0, 0) - (i1.kx(0, 0) - sol.params.b1(0, 0) -
                                            sol.params.b2(0, 0))) <= 1e-8);
  }
  SUBCASE("50 random feasible params reproduce their conditionals") {
    const CanonicalInstance i2 = testutil::inst2();
    GaussianStream gs(32, 0);
    for (int rep = 0; rep < 50; ++rep) {
      const SchemeParams sp = testutil::random_interior_params(i2, gs, rep);
      const TestChannels ch = build_test_channels(i2, sp);
      const InducedConditionals ind = induced_conditionals(i2, ch);
      const double scale = std::max(1.0, spectral_norm(i2.kx));
      CHECK((ind.ky_given_v.mat() - (i2.ky.mat() - sp.b2.mat())).norm() <=
            1e-7 * scale);
      CHECK((ind.kx_given_uv.mat() -
             (i2.kx.mat() - sp.b1.mat() - sp.b2.mat()))
                .norm() <= 1e-7 * scale);
      // The spec's defining equation for the V channel noise.
      if (ch.pv.rows() > 0) {
        const Matrix kv = ch.pv * i2.ky.mat() * ch.pv.transpose() + ch.kzv.mat();
        const Matrix b2_rec = i2.ky.mat() * ch.pv.transpose() * kv.inverse() *
                              ch.pv * i2.ky.mat();
        CHECK((b2_rec - sp.b2.mat()).norm() <= 1e-7 * scale);
      }
    }
  }
}

TEST_CASE("trace_region") {
  const CanonicalInstance i1 = testutil::inst1();
  SUBCASE("trivial instance traces to the origin") {
    CanonicalInstance triv = i1;
    triv.d = sym(2.0 * triv.kx.mat());
    const auto pts = trace_region(triv, {0.5, 1.0, 2.0, 4.0});
    for (const auto& p : pts) {
      CHECK(p.v == doctest::Approx(0.0));
      CHECK(p.r1 == doctest::Approx(0.0));
    }
  }
  SUBCASE("v is nondecreasing in mu") {
    const auto pts = trace_region(i1, {0.5, 1.0, 2.0, 4.0, 8.0});
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      CHECK(pts[i].v <= pts[i + 1].v + 1e-9);
  }
  SUBCASE("grid values match the oracle within 1e-4") {
    for (const double mu : {1.5, 2.0, 3.0}) {
      const auto pts = trace_region(i1, {mu});
      CHECK(std::abs(pts[0].v - grid_oracle(i1, mu)) <= 1e-4);
    }
  }
  SUBCASE("monotone in the distortion (Loewner)") {
    CanonicalInstance looser = i1;
    looser.d = SymMat(Matrix::Constant(1, 1, 0.5));
    const auto mu_list = std::vector<double>{0.5, 1.0, 2.0, 4.0};
    const auto tight = trace_region(i1, mu_list);
    const auto loose = trace_region(looser, mu_list);
    for (std::size_t i = 0; i < mu_list.size(); ++i)
      CHECK(tight[i].v >= loose[i].v - 1e-9);
  }
  SUBCASE("default grid has 26 points including exactly 1") {
    const auto grid = default_mu_grid();
    CHECK(grid.size() == 26);
    bool has_one = false;
    for (const double g : grid) has_one = has_one || g == 1.0;
    CHECK(has_one);
  }
}
