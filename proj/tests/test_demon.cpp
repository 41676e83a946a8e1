#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qcomm/demon.hpp"
#include "qcomm/epp.hpp"

using namespace qcomm;

namespace {

constexpr double kTol = 1e-12;

const BinaryNoiseSpec kCorrelatedFlips({{{0.8575, 0.0475}, {0.0475, 0.0475}}});

PauliNoiseSpec correlated_paulis() {
  PauliNoiseSpec::Table t{};
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) t[m][n] = (m == 0 && n == 0) ? 0.83981 : (m == 0 || n == 0) ? 0.021131 : 0.003712;
  return PauliNoiseSpec::normalized(t);
}

FlaggedBinaryState random_binary(std::mt19937_64& g) {
  const auto w = oracle::random_simplex(g);
  return {w[0], w[1], w[2], w[3]};
}

BinaryNoiseSpec random_binary_noise(std::mt19937_64& g) {
  const auto w = oracle::random_simplex(g);
  return BinaryNoiseSpec({{{w[0], w[1]}, {w[2], w[3]}}});
}

PauliNoiseSpec random_pauli_noise(std::mt19937_64& g) {
  std::exponential_distribution<double> e;
  PauliNoiseSpec::Table t{};
  for (auto& row : t)
    for (auto& x : row) x = e(g);
  return PauliNoiseSpec::normalized(t);
}

FlaggedBellState random_flagged(std::mt19937_64& g) {
  std::exponential_distribution<double> e;
  FlaggedBellState s;
  double total = 0;
  for (auto& row : s.c)
    for (auto& x : row) total += (x = e(g));
  for (auto& row : s.c)
    for (auto& x : row) x /= total;
  return s;
}

// Least-squares fit of log(y) against x; returns (slope, R^2).
std::pair<double, double> log_linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ly = std::log(y[i]);
    sx += x[i], sy += ly, sxx += x[i] * x[i], sxy += x[i] * ly, syy += ly * ly;
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  return {cov / vx, cov * cov / (vx * vy)};
}

// Root of 1.28x^3 - 1.92x^2 + 0.66x - 0.01 in (0.9, 1) by bisection.
double cubic_root_f09() {
  auto p = [](double x) { return ((1.28 * x - 1.92) * x + 0.66) * x - 0.01; };
  double lo = 0.9, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (p(lo) * p(mid) <= 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(BinaryStep, NoiselessExample) {
  const auto r = binary_step({0.8, 0, 0.2, 0}, BinaryNoiseSpec::factorized(1.0));
  EXPECT_NEAR(r.state.A0, 0.64 / 0.68, kTol);
  EXPECT_NEAR(r.state.B0, 0.04 / 0.68, kTol);
  EXPECT_EQ(r.state.A1, 0.0);
  EXPECT_EQ(r.state.B1, 0.0);
  EXPECT_NEAR(r.p_success, 0.68, kTol);

  const auto fixed = binary_step({1, 0, 0, 0}, BinaryNoiseSpec::factorized(1.0));
  EXPECT_NEAR(fixed.state.A0, 1, kTol);
  EXPECT_NEAR(fixed.p_success, 1, kTol);
}

TEST(BinaryStep, MatchesLabelEnumeration) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto s = random_binary(g);
    const auto f = random_binary_noise(g);
    const auto r = binary_step(s, f);
    const auto o = oracle::binary_enumeration(s.as_array(), f.table());
    EXPECT_NEAR(r.state.A0, o[0], kTol);
    EXPECT_NEAR(r.state.A1, o[1], kTol);
    EXPECT_NEAR(r.state.B0, o[2], kTol);
    EXPECT_NEAR(r.state.B1, o[3], kTol);
    EXPECT_NEAR(r.p_success, o[4], kTol);
    EXPECT_NEAR(r.state.sum(), 1, kTol);
    EXPECT_GE(std::min({r.state.A0, r.state.A1, r.state.B0, r.state.B1}), 0.0);
  }
}

TEST(BinaryStep, FlagMarginalIsFlagBlindMap) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_binary(g);
    const auto f = random_binary_noise(g);
    const auto flagged = binary_step(s, f);
    const auto blind = binary_step(FlaggedBinaryState::unflagged(s.fidelity()), f);
    EXPECT_NEAR(flagged.state.fidelity(), blind.state.fidelity(), kTol);
    EXPECT_NEAR(flagged.p_success, blind.p_success, kTol);
  }
}

TEST(BinaryStep, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_binary(g);
    const auto f = random_binary_noise(g);
    const Eigen::Matrix4d J = binary_jacobian(s, f);
    const double h = 1e-6;
    for (int k = 0; k < 4; ++k) {
      auto plus = s.as_array(), minus = s.as_array();
      plus[k] += h;
      minus[k] -= h;
      // Raw (unnormalized-input) evaluation through the enumeration oracle
      // keeps the map well defined off the simplex.
      const auto op = oracle::binary_enumeration(plus, f.table());
      const auto om = oracle::binary_enumeration(minus, f.table());
      for (int r = 0; r < 4; ++r) EXPECT_NEAR(J(r, k), (op[r] - om[r]) / (2 * h), 1e-6);
    }
  }
}

TEST(BinaryStep, CorrelatedFlipsDecayLogLinearly) {
  const auto rows = binary_trajectory(FlaggedBinaryState::unflagged(0.8), kCorrelatedFlips, 40);
  std::vector<double> x, a1, b0;
  for (int r = 5; r <= 25; ++r) {
    x.push_back(r);
    a1.push_back(rows[r].state.A1);
    b0.push_back(rows[r].state.B0);
  }
  for (const auto& y : {a1, b0}) {
    const auto [slope, r2] = log_linear_fit(x, y);
    EXPECT_LT(slope, 0);
    EXPECT_GT(r2, 0.99);
  }
  EXPECT_GE(rows[40].state.conditional_fidelity(), 1 - 1e-6);
  EXPECT_LT(rows[40].state.fidelity(), 1 - 1e-3);
}

TEST(BinaryFixpoint, Examples) {
  const auto one = binary_fixpoint(1.0);
  EXPECT_NEAR(one.A0, 1, 1e-12);
  EXPECT_NEAR(one.A1 + one.B0 + one.B1, 0, 1e-12);

  EXPECT_NEAR(binary_fixpoint(0.75).A0, 0.5, 1e-10);

  const auto f9 = binary_fixpoint(0.9);
  const double root = cubic_root_f09();
  EXPECT_NEAR(f9.A0, root, 1e-10);
  EXPECT_NEAR(f9.A0, 0.98412, 1e-5);
  EXPECT_NEAR(f9.B1, 1 - root, 1e-10);
  EXPECT_LE(f9.A1, 1e-10);
  EXPECT_LE(f9.B0, 1e-10);

  EXPECT_THROW(binary_fixpoint(0.7), std::invalid_argument);
  EXPECT_THROW(binary_fixpoint(kCorrelatedFlips), std::invalid_argument);
}

TEST(BinaryFixpoint, ClosedFormAgreesWithIteration) {
  for (double f0 = 0.78; f0 <= 1.0 + 1e-12; f0 += 0.02) {
    const auto s = binary_fixpoint(std::min(f0, 1.0));
    EXPECT_NEAR(s.A0, fixpoint_A0_closed_form(std::min(f0, 1.0)), 1e-10) << f0;
    const auto next = binary_step(s, BinaryNoiseSpec::factorized(std::min(f0, 1.0))).state;
    EXPECT_NEAR(next.A0, s.A0, 1e-12);
  }
  // The printed-denominator variant leaves the unit interval above 3/4.
  EXPECT_LT(fixpoint_A0_printed_form(0.9), 0);
}

TEST(CriticalNoise, ValueAndStability) {
  EXPECT_NEAR(critical_f0(), 0.77184451, 1e-4);
  auto radius = [](double f0) {
    return spectral_radius(binary_jacobian(binary_fixpoint(f0), BinaryNoiseSpec::factorized(f0)));
  };
  EXPECT_LT(radius(0.80), 1.0);
  EXPECT_GT(radius(0.76), 1.0);
}

TEST(ConditionalFidelity, Examples) {
  EXPECT_EQ(conditional_fidelity({1, 0, 0, 0}), 1.0);
  EXPECT_EQ(conditional_fidelity({0.5, 0, 0, 0.5}), 1.0);
  EXPECT_EQ(conditional_fidelity({0.25, 0.25, 0.25, 0.25}), 0.5);
}

TEST(Regime, Classification) {
  EXPECT_EQ(classify_regime(0.70), RegimeLabel::no_purification);
  EXPECT_EQ(classify_regime(0.76), RegimeLabel::intermediate);
  EXPECT_EQ(classify_regime(0.90), RegimeLabel::security);
  EXPECT_THROW(classify_regime(kCorrelatedFlips), std::invalid_argument);

  const auto it = iterate_binary(FlaggedBinaryState::unflagged(0.8), BinaryNoiseSpec::factorized(0.9));
  EXPECT_TRUE(it.converged);
  EXPECT_NEAR(it.state.conditional_fidelity(), 1, 1e-9);
}

TEST(Regime, MapRows) {
  const std::vector<double> grid{0.70, 0.76, 0.90, 1.0};
  const auto rows = regime_map(grid);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[0].state.fidelity(), 0.5, 1e-6);
  EXPECT_NEAR(rows[0].state.A0 + rows[0].state.A1, 0.5, 1e-6);
  EXPECT_EQ(rows[1].regime, RegimeLabel::intermediate);
  EXPECT_NEAR(rows[2].state.conditional_fidelity(), 1, 1e-6);
  EXPECT_LT(rows[2].state.fidelity(), 1);
  EXPECT_NEAR(rows[3].state.fidelity(), 1, 1e-12);
  EXPECT_NEAR(rows[3].state.conditional_fidelity(), 1, 1e-12);

  RegimeMapOptions threaded;
  threaded.workers = 3;
  std::ostringstream a, b;
  write_regime_csv(a, rows);
  write_regime_csv(b, regime_map(grid, threaded));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "f0,regime,A0_inf,B1_inf,F_inf,F_cond_inf,A1_inf,B0_inf,converged");
}

TEST(FlagUpdate, BinaryIsAnd) {
  EXPECT_EQ(flag_update_binary(0, 0), 0);
  EXPECT_EQ(flag_update_binary(1, 0), 0);
  EXPECT_EQ(flag_update_binary(0, 1), 0);
  EXPECT_EQ(flag_update_binary(1, 1), 1);
  // Restricted to Phi+ / Psi+ flags and sigma_x noise, the general rule is
  // AND of the noise-updated flags.
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int mu = 0; mu < 2; ++mu)
        for (int nu = 0; nu < 2; ++nu)
          EXPECT_EQ(flag_update(BellIndex(a), BellIndex(b), mu, nu).value(), flag_update_binary(a ^ mu, b ^ nu));
}

TEST(BellStep, NoiselessFixedPoint) {
  const auto r = bell_step(FlaggedBellState::unflagged(1, 0, 0, 0), PauliNoiseSpec::noiseless());
  EXPECT_NEAR(r.state.at(kPhiPlus, kPhiPlus), 1, kTol);
  EXPECT_NEAR(r.p_success, 1, kTol);
}

TEST(BellStep, NormalizedForRandomInputs) {
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto r = bell_step(random_flagged(g), random_pauli_noise(g));
    EXPECT_NEAR(r.state.sum(), 1, kTol);
    for (const auto& row : r.state.c)
      for (double x : row) EXPECT_GE(x, 0.0);
  }
}

TEST(BellStep, EmbedsBinaryRecurrence) {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_binary(g);
    const auto f = random_binary_noise(g);
    const auto bin = binary_step(s, f);
    const auto gen = bell_step(FlaggedBellState::from_binary(s), f.to_pauli());
    const auto expect = FlaggedBellState::from_binary(bin.state);
    for (int b = 0; b < 4; ++b)
      for (int l = 0; l < 4; ++l) EXPECT_NEAR(gen.state.c[b][l], expect.c[b][l], kTol);
    EXPECT_NEAR(gen.p_success, bin.p_success, kTol);
  }
}

TEST(BellStep, FlagMarginalMatchesDenseNoisyStep) {
  std::mt19937_64 g(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_flagged(g);
    const auto f = random_pauli_noise(g);
    const auto r = bell_step(s, f);
    const auto w = s.bell_weights();  // Phi+, Psi+, Phi-, Psi-
    const auto o = oracle::oxford_dense(oracle::bell_diag(w[0], w[3], w[1], w[2]), &f.table());
    const auto m = r.state.bell_weights();
    EXPECT_NEAR(m[0], o.A, 1e-12);
    EXPECT_NEAR(m[3], o.B, 1e-12);
    EXPECT_NEAR(m[1], o.C, 1e-12);
    EXPECT_NEAR(m[2], o.D, 1e-12);
    EXPECT_NEAR(r.p_success, o.N, 1e-12);
  }
}

TEST(BellStep, OnlyFlagMatchedSurvive) {
  const auto rows = bell_trajectory(FlaggedBellState::werner(0.8), correlated_paulis(), 100);
  const auto& s = rows.back().state;
  EXPECT_LT(s.mismatched_weight(), 1e-6);
  for (int b = 0; b < 4; ++b) {
    EXPECT_GT(s.c[b][b], 1e-3) << bell_name(BellIndex(b));
    for (int l = 0; l < 4; ++l)
      if (l != b) EXPECT_LT(s.c[b][l], 1e-6);
  }
  EXPECT_LT(s.fidelity(), 1 - 1e-2);
  EXPECT_NEAR(s.conditional_fidelity(), 1, 1e-6);
  EXPECT_NEAR(rows.front().state.flag_information(), 0, kTol);
  EXPECT_GT(s.flag_information(), 0.5);
}

TEST(BellTables, FrozenEqualsDerived) {
  EXPECT_EQ(bell::frozen_tables(), bell::derived_tables());
  const auto& t = bell::derived_tables();
  EXPECT_EQ(t.rotation[kPhiMinus.value()], kPsiMinus);
  EXPECT_EQ(t.rotation[kPhiPlus.value()], kPhiPlus);
  EXPECT_TRUE(t.coincidence[kPhiMinus.value()]);
  EXPECT_FALSE(t.coincidence[kPsiPlus.value()]);
}

TEST(Randomize, LabelsKeepMultiset) {
  std::vector<FlaggedPair> pairs;
  for (int i = 0; i < 64; ++i) pairs.push_back({BellIndex(i % 4), BellIndex((i / 4) % 4)});
  auto shuffled = pairs;
  Rng rng(7);
  randomize_ensemble(shuffled, rng);
  EXPECT_NE(shuffled, pairs);
  auto key = [](const FlaggedPair& p) { return 4 * p.bell.value() + p.flag.value(); };
  auto sorted = [&](std::vector<FlaggedPair> v) {
    std::sort(v.begin(), v.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
    return v;
  };
  EXPECT_EQ(sorted(shuffled), sorted(pairs));
}

TEST(Randomize, DenseTwirlRemovesCoherences) {
  std::mt19937_64 g(8);
  const DensityOperator rho(4, oracle::random_density(4, g));
  const DensityOperator exact = randomize_ensemble_exact(rho, 2);
  // Bell product basis: columns bell(a) (x) bell(b).
  oracle::M basis(16, 16);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) basis.col(4 * a + b) = oracle::kron(oracle::bell(a), oracle::bell(b));
  const oracle::M inbasis = basis.adjoint() * exact.matrix() * basis;
  oracle::M off = inbasis;
  off.diagonal().setZero();
  EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-12);
  // The pair permutation symmetrizes the diagonal.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_NEAR(inbasis(4 * a + b, 4 * a + b).real(), inbasis(4 * b + a, 4 * b + a).real(), 1e-12);
  EXPECT_TRUE(exact.is_physical());
}

TEST(Randomize, DenseSamplesAverageToExactTwirl) {
  std::mt19937_64 g(9);
  const DensityOperator rho(4, oracle::random_density(4, g));
  const DensityOperator exact = randomize_ensemble_exact(rho, 2);
  Rng rng(10);
  const int n = 4000;
  Matrix avg = Matrix::Zero(16, 16);
  for (int i = 0; i < n; ++i) avg += randomize_ensemble(rho, 2, rng).matrix() / double(n);
  EXPECT_LT(trace_distance(DensityOperator(4, avg), exact), 0.05);
}

TEST(Randomize, PermutePairsMovesQubits) {
  const std::array<BellIndex, 2> labels{kPsiMinus, kPhiPlus};
  const std::array<BellIndex, 2> swapped{kPhiPlus, kPsiMinus};
  const auto out = permute_pairs(DensityOperator(bell_product(labels)), {1, 0});
  EXPECT_NEAR(fidelity(out, bell_product(swapped)), 1, kTol);
}

TEST(MonteCarlo, NoiselessStaysPure) {
  MonteCarloOptions o;
  o.n_pairs = 1024;
  o.rounds = 5;
  const auto r = monte_carlo_distill(FlaggedBellState::unflagged(1, 0, 0, 0), PauliNoiseSpec::noiseless(), o);
  ASSERT_EQ(r.rounds.size(), 6u);
  EXPECT_FALSE(r.truncated);
  for (const auto& round : r.rounds) {
    EXPECT_EQ(round.counts[0][0], round.pairs);
    EXPECT_EQ(round.p_success, 1.0);
  }
  EXPECT_EQ(r.rounds.back().pairs, 1024u >> 5);
}

TEST(MonteCarlo, InitialSamplingMatchesDistribution) {
  MonteCarloOptions o;
  o.n_pairs = 100000;
  o.rounds = 0;
  const auto s0 = FlaggedBellState::unflagged(0.6, 0.2, 0.15, 0.05);
  const auto r = monte_carlo_distill(s0, PauliNoiseSpec::noiseless(), o);
  const auto est = r.rounds[0].estimate();
  for (int b = 0; b < 4; ++b)
    EXPECT_LT(std::abs(est.c[b][0] - s0.c[b][0]), 4 * oracle::binomial_sigma(s0.c[b][0], o.n_pairs) + 1e-12);
}

TEST(MonteCarlo, DeterministicForSeedAndWorkers) {
  MonteCarloOptions o;
  o.n_pairs = 20000;
  o.rounds = 4;
  o.seed = 99;
  o.workers = 2;
  const auto s0 = FlaggedBellState::from_binary(FlaggedBinaryState::unflagged(0.8));
  std::ostringstream a, b;
  write_monte_carlo_csv(a, monte_carlo_distill(s0, kCorrelatedFlips, o));
  write_monte_carlo_csv(b, monte_carlo_distill(s0, kCorrelatedFlips, o));
  EXPECT_EQ(a.str(), b.str());
  o.seed = 100;
  std::ostringstream c;
  write_monte_carlo_csv(c, monte_carlo_distill(s0, kCorrelatedFlips, o));
  EXPECT_NE(a.str(), c.str());
}

TEST(MonteCarlo, AgreesWithBinaryRecurrence) {
  MonteCarloOptions o;
  o.n_pairs = 200000;
  o.rounds = 6;
  o.seed = 5;
  const auto s0 = FlaggedBinaryState::unflagged(0.8);
  const auto r = monte_carlo_distill(FlaggedBellState::from_binary(s0), kCorrelatedFlips, o);
  const auto exact = binary_trajectory(s0, kCorrelatedFlips, o.rounds);
  int cells = 0, inside = 0;
  for (int k = 1; k <= o.rounds; ++k) {
    const auto est = r.rounds[k].estimate();
    const auto ref = FlaggedBellState::from_binary(exact[k].state);
    const double n = double(r.rounds[k].pairs);
    for (int b : {0, 1})
      for (int l : {0, 1}) {
        const double p = ref.c[b][l];
        ++cells;
        inside += std::abs(est.c[b][l] - p) <= 3 * oracle::binomial_sigma(p, n) + 1e-12;
      }
  }
  EXPECT_GE(inside, 0.95 * cells) << inside << "/" << cells;
}

TEST(MonteCarlo, ReportsExhaustion) {
  MonteCarloOptions o;
  o.n_pairs = 8;
  o.rounds = 10;
  const auto r = monte_carlo_distill(FlaggedBellState::werner(0.7), PauliNoiseSpec::noiseless(), o);
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(r.note.empty());
  EXPECT_LT(r.rounds.size(), 11u);
  o.n_pairs = 7;
  EXPECT_THROW(monte_carlo_distill(FlaggedBellState::werner(0.7), PauliNoiseSpec::noiseless(), o), std::invalid_argument);
}

TEST(Csv, Headers) {
  std::ostringstream bin, bell;
  write_binary_csv(bin, binary_trajectory(FlaggedBinaryState::unflagged(0.8), kCorrelatedFlips, 1));
  EXPECT_EQ(bin.str().substr(0, bin.str().find('\n')), "round,A0,A1,B0,B1,F,F_cond,p_success");
  write_bell_csv(bell, bell_trajectory(FlaggedBellState::werner(0.8), correlated_paulis(), 1));
  const std::string head = bell.str().substr(0, bell.str().find('\n'));
  EXPECT_EQ(head.substr(0, 16), "round,A00,A01,A1");
  EXPECT_NE(head.find("D11,F,F_cond"), std::string::npos);
  EXPECT_EQ(coefficient_name(kPsiPlus, kPsiPlus), "C01");
  EXPECT_EQ(coefficient_name(kPsiMinus, kPhiMinus), "B10");
}
