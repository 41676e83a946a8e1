#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qcomm/epp.hpp"

using namespace qcomm;

namespace {

constexpr double kTol = 1e-12;

BellDiagonal random_bell_diagonal(std::mt19937_64& g) {
  const auto w = oracle::random_simplex(g);
  return {w[0], w[1], w[2], w[3]};
}

void expect_state_near(const BellDiagonal& a, const BellDiagonal& b, double tol) {
  EXPECT_NEAR(a.A, b.A, tol);
  EXPECT_NEAR(a.B, b.B, tol);
  EXPECT_NEAR(a.C, b.C, tol);
  EXPECT_NEAR(a.D, b.D, tol);
}

}  // namespace

TEST(BellDiagonalTest, Construction) {
  const auto w = BellDiagonal::werner(0.7);
  EXPECT_NEAR(w.B, 0.1, kTol);
  EXPECT_THROW((BellDiagonal{0.5, 0.6, 0, 0}.validate()), QuantumError);
  EXPECT_THROW((BellDiagonal{1.1, -0.1, 0, 0}.validate()), QuantumError);
  const BellDiagonal s{0.4, 0.3, 0.2, 0.1};
  expect_state_near(BellDiagonal::from_density(s.to_density()), s, kTol);
  EXPECT_LT((s.to_density().matrix() - oracle::bell_diag(0.4, 0.3, 0.2, 0.1)).cwiseAbs().maxCoeff(), kTol);
}

TEST(OxfordStep, Examples) {
  const auto pure = oxford_step({1, 0, 0, 0});
  expect_state_near(pure.state, {1, 0, 0, 0}, kTol);
  EXPECT_NEAR(pure.p_success, 1, kTol);

  const auto w = oxford_step(BellDiagonal::werner(0.75));
  EXPECT_NEAR(w.state.A, 41.0 / 52.0, kTol);  // 0.788461...
  EXPECT_NEAR(w.p_success, 13.0 / 18.0, kTol);  // 0.72222...

  // A = B = 1/2: the recurrence gives A' = D' = 1/2 with N = 1.
  const auto half = oxford_step({0.5, 0.5, 0, 0});
  EXPECT_NEAR(half.state.A, 0.5, kTol);
  EXPECT_NEAR(half.state.D, 0.5, kTol);
  EXPECT_NEAR(half.p_success, 1, kTol);
}

TEST(OxfordStep, MatchesClosedFormAndIsNormalized) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 10000; ++trial) {
    const BellDiagonal s = random_bell_diagonal(g);
    const auto r = oxford_step(s);
    const auto o = oracle::oxford_formula(s.A, s.B, s.C, s.D);
    expect_state_near(r.state, {o.A, o.B, o.C, o.D}, kTol);
    EXPECT_NEAR(r.p_success, o.N, kTol);
    EXPECT_GE(std::min({r.state.A, r.state.B, r.state.C, r.state.D}), 0.0);
    EXPECT_NEAR(r.state.sum(), 1.0, kTol);
  }
}

TEST(OxfordStepDense, AgreesWithRecurrenceAndOracle) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 25; ++trial) {
    const BellDiagonal s = random_bell_diagonal(g);
    const auto dense = oxford_step_dense(s.to_density());
    const auto exact = oxford_step(s);
    const auto o = oracle::oxford_dense(oracle::bell_diag(s.A, s.B, s.C, s.D));
    expect_state_near(dense.state, exact.state, 1e-10);
    expect_state_near(dense.state, {o.A, o.B, o.C, o.D}, 1e-10);
    EXPECT_NEAR(dense.p_success, exact.p_success, 1e-10);
    EXPECT_NEAR(dense.p_success, o.N, 1e-10);
  }
}

TEST(OxfordStepDense, PerfectPairUnchanged) {
  const auto r = oxford_step_dense(DensityOperator(bell_state(kPhiPlus)));
  EXPECT_NEAR(r.state.A, 1, 1e-12);
  EXPECT_NEAR(r.p_success, 1, 1e-12);
}

TEST(OxfordStepDense, IgnoresBellCoherences) {
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityOperator rho(2, oracle::random_density(2, g));
    ASSERT_GT(bell_decompose(rho).offdiag_norm, 1e-3);
    const auto full = oxford_step_dense(rho);
    const auto diag = oxford_step_dense(bell_diagonal_part(rho));
    expect_state_near(full.state, diag.state, 1e-10);
    EXPECT_NEAR(full.p_success, diag.p_success, 1e-10);
  }
}

TEST(WernerTwirl, Examples) {
  expect_state_near(werner_twirl({1, 0, 0, 0}), {1, 0, 0, 0}, kTol);
  expect_state_near(werner_twirl({0.7, 0.2, 0.05, 0.05}), {0.7, 0.1, 0.1, 0.1}, kTol);
  const BellDiagonal s{0.4, 0.3, 0.2, 0.1};
  expect_state_near(werner_twirl(werner_twirl(s)), werner_twirl(s), kTol);
}

TEST(IbmStep, FixpointsAndCurve) {
  EXPECT_NEAR(ibm_step(BellDiagonal::werner(1)).state.A, 1, kTol);
  EXPECT_NEAR(ibm_step(BellDiagonal::werner(0.5)).state.A, 0.5, kTol);
  EXPECT_NEAR(ibm_step(BellDiagonal::werner(0.25)).state.A, 0.25, kTol);
  for (int i = 0; i <= 100; ++i) {
    const double F = 0.25 + 0.75 * i / 100;
    EXPECT_NEAR(werner_map(ibm_stepper(), F), oracle::ibm_map(F), kTol);
  }
}

TEST(NoisyStep, NoiselessLimitIsOxford) {
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 20; ++trial) {
    const BellDiagonal s = random_bell_diagonal(g);
    const auto noisy = noisy_step(s, ApparatusNoise{1, 1, 1});
    const auto exact = oxford_step(s);
    expect_state_near(noisy.state, exact.state, 1e-12);
    EXPECT_NEAR(noisy.p_success, exact.p_success, 1e-12);
  }
}

TEST(NoisyStep, CurvePulledDownByGateNoise) {
  for (double F : {0.6, 0.75, 0.9}) {
    double prev = 2;
    for (double p2 = 1.0; p2 >= 0.9; p2 -= 0.01) {
      const double Fp = noisy_step(BellDiagonal::werner(F), ApparatusNoise{1, p2, 1}).state.A;
      EXPECT_LE(Fp, prev + 1e-12);
      prev = Fp;
    }
  }
  for (double eta = 1.0; eta >= 0.9; eta -= 0.02) {
    const auto r = noisy_step(BellDiagonal::werner(0.8), ApparatusNoise{1, 1, eta});
    EXPECT_NEAR(r.state.sum(), 1, 1e-12);
  }
}

TEST(NoisyStep, BreakdownAtLowReliability) {
  const auto [gain, where] = max_purification_gain(noisy_stepper(ApparatusNoise{1, 0.85, 1}));
  EXPECT_LE(gain, 1e-12);
  const auto [gain_ok, where_ok] = max_purification_gain(noisy_stepper(ApparatusNoise{1, 0.99, 1}));
  EXPECT_GT(gain_ok, 0.0);
  EXPECT_GT(where_ok, 0.5);
  (void)where;
}

TEST(Distill, PerfectPairs) {
  const auto t = distill({1, 0, 0, 0}, 8, oxford_stepper());
  ASSERT_EQ(t.rows.size(), 9u);
  for (const auto& r : t.rows) EXPECT_NEAR(r.state.A, 1, kTol);
  EXPECT_NEAR(t.final_yield(), std::pow(2.0, -8), kTol);
}

TEST(Distill, OxfordIncreasesFromWerner) {
  const auto t = distill(BellDiagonal::werner(0.7), 40, oxford_stepper());
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (t.rows[i - 1].state.A < 1 - 1e-15) EXPECT_GT(t.rows[i].state.A, t.rows[i - 1].state.A);
  }
  EXPECT_GE(t.final_state().A, 1 - 1e-12);
}

TEST(Distill, IbmBelowHalfDepolarizes) {
  const auto t = distill(BellDiagonal::werner(0.4), 200, ibm_stepper());
  EXPECT_NEAR(t.final_state().A, 0.25, 1e-9);
}

TEST(Distill, OxfordConvergesAboveHalf) {
  std::mt19937_64 g(5);
  int tried = 0;
  while (tried < 1000) {
    BellDiagonal s = random_bell_diagonal(g);
    if (s.A <= 0.5) continue;
    ++tried;
    int rounds = 0;
    while (s.A < 1 - 1e-9 && rounds < 20000) {
      s = oxford_step(s).state;
      ++rounds;
    }
    EXPECT_GE(s.A, 1 - 1e-9) << "start A index " << tried;
  }
}

TEST(Distill, CsvHeader) {
  std::ostringstream out;
  write_trajectory_csv(out, distill(BellDiagonal::werner(0.7), 1, oxford_stepper()));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "round,A,B,C,D,F,p_success,yield");
}

TEST(FixpointScan, IbmFixpoints) {
  const auto r = fixpoint_scan(ibm_stepper());
  ASSERT_EQ(r.fixpoints.size(), 3u);
  const double expect[3] = {0.25, 0.5, 1.0};
  const Stability stab[3] = {Stability::attractive, Stability::repulsive, Stability::attractive};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.fixpoints[i].location, expect[i], 1e-9);
    EXPECT_EQ(r.fixpoints[i].stability, stab[i]);
    EXPECT_EQ(r.fixpoints[i].derivative < 1, stab[i] == Stability::attractive);
  }
  EXPECT_TRUE(r.diagnostics.empty());
}

TEST(FixpointScan, NoiseLowersUpperFixpoint) {
  const auto moderate = fixpoint_scan(noisy_stepper(ApparatusNoise{1, 0.98, 1}));
  ASSERT_EQ(moderate.fixpoints.size(), 3u);
  EXPECT_LT(moderate.fixpoints.back().location, 1.0 - 1e-4);
  EXPECT_EQ(moderate.fixpoints.back().stability, Stability::attractive);

  const auto severe = fixpoint_scan(noisy_stepper(ApparatusNoise{1, 0.85, 1}));
  ASSERT_EQ(severe.fixpoints.size(), 1u);
  EXPECT_EQ(severe.fixpoints[0].stability, Stability::attractive);
  EXPECT_NEAR(severe.fixpoints[0].location, 0.25, 1e-6);
}

TEST(Threshold, GateNoiseInPercentRange) {
  const auto r = threshold_search(NoiseAxis::p2);
  EXPECT_TRUE(r.monotone);
  EXPECT_GT(1 - r.critical, 1e-3);
  EXPECT_LT(1 - r.critical, 1e-1);
  EXPECT_LE(r.upper - r.lower, 1e-4);
  EXPECT_TRUE(purifiable(ApparatusNoise{1, r.upper, 1}));
  EXPECT_FALSE(purifiable(ApparatusNoise{1, r.lower, 1}));
}

TEST(Threshold, NoiselessEndpointPurifies) {
  EXPECT_TRUE(purifiable(ApparatusNoise{}));
  const auto t = distill(BellDiagonal::werner(0.9), 60, noisy_stepper(ApparatusNoise{}));
  EXPECT_GE(t.final_state().A, 1 - 1e-9);
}

TEST(Threshold, AxisParsing) {
  EXPECT_EQ(parse_noise_axis("eta"), NoiseAxis::eta);
  EXPECT_THROW(parse_noise_axis("p3"), std::invalid_argument);
  EXPECT_THROW(make_stepper("bogus"), std::invalid_argument);
}
