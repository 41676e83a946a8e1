#pragma once

// Flagged-ensemble ("lab demon") analysis of noisy purification. The demon
// applies the sampled Pauli errors on Alice's side and keeps a two-bit error
// flag per pair; pairs are described per flag value.
//
// Flags are Bell labels: flag lambda = ij stands for BellIndex(2i + j), so a
// pair whose Bell index equals its flag is "flag-matched". In the binary
// setting (Phi+ / Psi+ only) flag bit 1 stands for Psi+.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "qcomm/bell_tables.hpp"
#include "qcomm/channels.hpp"
#include "qcomm/qcore.hpp"
#include "qcomm/random.hpp"

namespace qcomm {

// ---------------------------------------------------------------------------
// Binary pairs

/// A0, A1: Phi+ with flag 0 / 1. B0, B1: Psi+ with flag 0 / 1.
struct FlaggedBinaryState {
  double A0 = 1, A1 = 0, B0 = 0, B1 = 0;

  /// Unflagged binary state F Phi+ + (1 - F) Psi+ with every flag 0.
  static FlaggedBinaryState unflagged(double F);

  double fidelity() const { return A0 + A1; }
  double conditional_fidelity() const { return A0 + B1; }
  double sum() const { return A0 + A1 + B0 + B1; }
  std::array<double, 4> as_array() const { return {A0, A1, B0, B1}; }
  static FlaggedBinaryState from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }
  void validate(double tol = 1e-12) const;
};

struct BinaryStepResult {
  FlaggedBinaryState state;
  double p_success = 1;
};

/// The flagged binary recurrence (AND flag update).
BinaryStepResult binary_step(const FlaggedBinaryState& s, const BinaryNoiseSpec& f);

/// 4x4 Jacobian of the normalized binary map at s (variables A0, A1, B0, B1).
Eigen::Matrix4d binary_jacobian(const FlaggedBinaryState& s, const BinaryNoiseSpec& f);
double spectral_radius(const Eigen::Matrix4d& m);

double conditional_fidelity(const FlaggedBinaryState& s);

/// flag_src AND flag_tgt.
constexpr int flag_update_binary(int flag_src, int flag_tgt) { return flag_src & flag_tgt; }

struct BinaryIteration {
  FlaggedBinaryState state;
  int iterations = 0;
  bool converged = false;
};

/// Iterates binary_step until the elementwise change is below `tol`.
BinaryIteration iterate_binary(const FlaggedBinaryState& start, const BinaryNoiseSpec& f, int cap = 1000000,
                               double tol = 1e-14);

/// Nontrivial fixpoint for factorized noise with f0 >= 3/4, reached by
/// iteration from (1, 0, 0, 0) and polished on the invariant line
/// A1 = B0 = 0. Throws std::invalid_argument outside that domain and
/// NumericError if the fixpoint equation is not met.
FlaggedBinaryState binary_fixpoint(const BinaryNoiseSpec& f);
FlaggedBinaryState binary_fixpoint(double f0);

/// Closed-form branch 1/2 + sqrt(f0 - 3/4) / (2 f0 - 1) of the fixpoint,
/// and the same expression with the (f0 - 1) denominator as printed in the
/// literature (which leaves [0, 1] and is kept only for comparison).
double fixpoint_A0_closed_form(double f0);
double fixpoint_A0_printed_form(double f0);

/// Factorized noise strength at which the nontrivial fixpoint stops being an
/// attractor (spectral radius of the Jacobian crosses 1). Bisection on
/// [0.7501, 0.999] to 1e-6; computed once.
double critical_f0();
/// Same search with explicit bracket and tolerance (not cached).
double critical_f0_search(double lo, double hi, double tolerance);

enum class RegimeLabel { no_purification, intermediate, security };
const char* regime_name(RegimeLabel r);

/// Requires factorized noise.
RegimeLabel classify_regime(const BinaryNoiseSpec& f);
RegimeLabel classify_regime(double f0);

struct BinaryRow {
  int round = 0;
  FlaggedBinaryState state;
  double p_success = 1;
};

std::vector<BinaryRow> binary_trajectory(const FlaggedBinaryState& s0, const BinaryNoiseSpec& f, int rounds);
/// round, A0, A1, B0, B1, F, F_cond, p_success.
void write_binary_csv(std::ostream& out, const std::vector<BinaryRow>& rows);

struct RegimeRow {
  double f0 = 1;
  RegimeLabel regime = RegimeLabel::security;
  FlaggedBinaryState state;  // limit of iteration from the configured start
  bool converged = false;
};

struct RegimeMapOptions {
  FlaggedBinaryState start = FlaggedBinaryState::unflagged(0.8);
  int iteration_cap = 1000000;
  double tolerance = 1e-14;
  int workers = 1;
};

std::vector<RegimeRow> regime_map(const std::vector<double>& f0_grid, const RegimeMapOptions& options = {});
/// f0, regime, A0_inf, B1_inf, F_inf, F_cond_inf, A1_inf, B0_inf, converged.
void write_regime_csv(std::ostream& out, const std::vector<RegimeRow>& rows);

// ---------------------------------------------------------------------------
// General Bell-diagonal pairs with two-bit flags

/// c[bell][flag], both in BellIndex order (Phi+, Psi+, Phi-, Psi-).
struct FlaggedBellState {
  std::array<std::array<double, 4>, 4> c{};

  /// Bell-diagonal weights A, B, C, D (Phi+, Psi-, Psi+, Phi-), all flags 00.
  static FlaggedBellState unflagged(double A, double B, double C, double D);
  static FlaggedBellState werner(double F);
  /// Embeds a binary state: flag bit 1 becomes flag 01 (Psi+).
  static FlaggedBellState from_binary(const FlaggedBinaryState& s);

  double& at(BellIndex bell, BellIndex flag) { return c[bell.value()][flag.value()]; }
  double at(BellIndex bell, BellIndex flag) const { return c[bell.value()][flag.value()]; }
  double sum() const;
  /// Weight of Phi+ over all flags.
  double fidelity() const;
  /// Weight on bell == flag.
  double conditional_fidelity() const;
  double mismatched_weight() const { return sum() - conditional_fidelity(); }
  /// Flag-marginal Bell weights in BellIndex order.
  std::array<double, 4> bell_weights() const;
  /// Mutual information (bits) between Bell index and flag.
  double flag_information() const;
  void validate(double tol = 1e-12) const;
};

/// Two-bit flag update: both flags are carried through the step like the
/// pair labels (rotation, then the sampled Paulis, then the CNOT table). If
/// the flags predict coincidence, the kept pair receives the predicted source
/// label; otherwise the pair is no longer identified and the flag resets to
/// 00. Restricted to binary flags this is flag_update_binary.
BellIndex flag_update(BellIndex flag_src, BellIndex flag_tgt, int mu, int nu);

struct BellStepResult {
  FlaggedBellState state;
  double p_success = 1;
};

/// Exact flagged recurrence by enumeration of all label / flag / noise
/// combinations.
BellStepResult bell_step(const FlaggedBellState& s, const PauliNoiseSpec& f);

struct BellRow {
  int round = 0;
  FlaggedBellState state;
  double p_success = 1;
};

std::vector<BellRow> bell_trajectory(const FlaggedBellState& s0, const PauliNoiseSpec& f, int rounds);
/// round, the 16 coefficients A00..D11 (A Phi+, B Psi-, C Psi+, D Phi-;
/// suffix = flag bits), F, F_cond.
void write_bell_csv(std::ostream& out, const std::vector<BellRow>& rows);
/// Column name of c[bell][flag], e.g. "C01".
std::string coefficient_name(BellIndex bell, BellIndex flag);

// ---------------------------------------------------------------------------
// Randomization (twirl + renumbering)

struct FlaggedPair {
  BellIndex bell;
  BellIndex flag;
  bool operator==(const FlaggedPair&) const = default;
};

/// Bilateral sigma_k (x) sigma_k rotations leave Bell labels unchanged up to
/// phase, so on labels this draws the twirl (for stream alignment with the
/// dense variant) and applies a uniformly random renumbering.
void randomize_ensemble(std::vector<FlaggedPair>& pairs, Rng& rng);
/// One random element of the twirl group and one random permutation applied
/// to a dense state of n_pairs pairs (pair j on qubits 2j, 2j+1).
DensityOperator randomize_ensemble(const DensityOperator& rho, int n_pairs, Rng& rng);
/// Exact average over the 4^n bilateral twirls and the n! renumberings.
DensityOperator randomize_ensemble_exact(const DensityOperator& rho, int n_pairs);
/// Qubit-level permutation of pairs: pair j moves to position perm[j].
DensityOperator permute_pairs(const DensityOperator& rho, const std::vector<int>& perm);

// ---------------------------------------------------------------------------
// Monte Carlo

using NoiseModel = std::variant<PauliNoiseSpec, BinaryNoiseSpec>;

struct MonteCarloOptions {
  std::size_t n_pairs = 1000000;
  int rounds = 10;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct MonteCarloRound {
  int round = 0;
  std::uint64_t pairs = 0;  // surviving pairs after this round
  std::array<std::array<std::uint64_t, 4>, 4> counts{};  // [bell][flag]
  double p_success = 1;     // kept / attempted
  FlaggedBellState estimate() const;
};

struct MonteCarloResult {
  std::vector<MonteCarloRound> rounds;  // rounds[0] is the initial ensemble
  bool truncated = false;
  std::string note;
};

/// Samples n_pairs i.i.d. labels from `initial`, then per round: randomize,
/// pair neighbours (source, target), draw (mu, nu), propagate labels and
/// flags, keep sources whose target coincides. Unpaired leftovers are
/// dropped. Workers own contiguous slices of the ensemble and independent
/// RNG streams derived from the seed.
MonteCarloResult monte_carlo_distill(const FlaggedBellState& initial, const NoiseModel& noise,
                                     const MonteCarloOptions& options);

/// round, pairs, 16 coefficient estimates, F, F_cond, p_success.
void write_monte_carlo_csv(std::ostream& out, const MonteCarloResult& r);

}  // namespace qcomm
