#pragma once

// Two-way entanglement purification on Bell-diagonal pairs.
//
// Pair layout in the dense simulation: pair 1 = (a1, b1) on qubits (0, 1),
// pair 2 = (a2, b2) on qubits (2, 3). Alice holds a1, a2; Bob holds b1, b2.
// One step: Alice rotates a1, a2 by exp(-i pi/4 sigma_x), Bob rotates b1, b2
// by exp(+i pi/4 sigma_x); both apply CNOT (pair 1 control, pair 2 target);
// pair 2 is measured in sigma_z and pair 1 is kept when the outcomes agree.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcomm/channels.hpp"
#include "qcomm/qcore.hpp"

namespace qcomm {

/// A |Phi+><Phi+| + B |Psi-><Psi-| + C |Psi+><Psi+| + D |Phi-><Phi-|.
struct BellDiagonal {
  double A = 1, B = 0, C = 0, D = 0;

  static BellDiagonal werner(double F);
  /// Diagonal Bell-basis weights of a 2-qubit operator (coherences dropped).
  static BellDiagonal from_density(const DensityOperator& rho);
  /// Weights in BellIndex order (Phi+, Psi+, Phi-, Psi-).
  static BellDiagonal from_bell_weights(const std::array<double, 4>& w);

  DensityOperator to_density() const;
  std::array<double, 4> bell_weights() const { return {A, C, D, B}; }
  double fidelity() const { return A; }
  double sum() const { return A + B + C + D; }
  /// Throws QuantumError on a negative entry or |sum - 1| > tol.
  void validate(double tol = 1e-12) const;
};

struct StepResult {
  BellDiagonal state;
  double p_success = 1;
};

StepResult oxford_step(const BellDiagonal& s);
/// (A, (1-A)/3, (1-A)/3, (1-A)/3).
BellDiagonal werner_twirl(const BellDiagonal& s);
/// werner_twirl . oxford_step . werner_twirl.
StepResult ibm_step(const BellDiagonal& s);

/// Where apparatus noise enters the dense step.
struct NoisePlacement {
  /// One-qubit depolarization (p1) after each of the four rotations.
  bool after_rotations = true;
  /// p2 after each party's CNOT: a two-qubit channel (d = 4) on the party's
  /// two qubits when true, independent one-qubit channels otherwise.
  bool after_cnots = true;
  bool joint_cnot_channel = true;
  /// Unreliable z readout (eta) on both measured qubits.
  bool at_measurements = true;
};

struct DenseStepOptions {
  ApparatusNoise apparatus;
  NoisePlacement placement;
  /// Correlated Pauli channel on Alice's (a1, a2), applied after the
  /// rotations and before the CNOTs.
  std::optional<PauliNoiseSpec> alice_noise;
};

/// Full 16x16 simulation of one step on rho (x) rho.
StepResult oxford_step_dense(const DensityOperator& pair, const DenseStepOptions& options = {});
/// Same on an arbitrary 4-qubit input (pair 1 on qubits 0,1; pair 2 on 2,3).
/// Returns the postselected 2-qubit operator together with its probability.
std::pair<DensityOperator, double> purification_step_dense(const DensityOperator& four_qubits,
                                                           const DenseStepOptions& options = {});

/// oxford_step_dense with apparatus noise, on the Bell-diagonal input.
StepResult noisy_step(const BellDiagonal& s, const ApparatusNoise& noise,
                      const NoisePlacement& placement = {});

using Stepper = std::function<StepResult(const BellDiagonal&)>;

Stepper oxford_stepper();
Stepper ibm_stepper();
/// noisy_step, optionally sandwiched between Werner twirls.
Stepper noisy_stepper(const ApparatusNoise& noise, bool twirl = true, const NoisePlacement& placement = {});
/// Looks up "oxford", "ibm", "noisy-oxford", "noisy-ibm".
Stepper make_stepper(const std::string& name, const ApparatusNoise& noise = {});

/// F -> F' on the Werner line.
double werner_map(const Stepper& step, double F);

// ---------------------------------------------------------------------------
// Distillation

struct DistillRow {
  int round = 0;
  BellDiagonal state;
  double p_success = 1;  // of the step that produced this row; 1 for round 0
  double yield = 1;      // prod_k p_success_k / 2
};

struct Trajectory {
  std::vector<DistillRow> rows;
  double final_yield() const { return rows.empty() ? 1.0 : rows.back().yield; }
  const BellDiagonal& final_state() const { return rows.back().state; }
};

Trajectory distill(const BellDiagonal& s0, int rounds, const Stepper& step);
/// round, A, B, C, D, F, p_success, yield.
void write_trajectory_csv(std::ostream& out, const Trajectory& t);

// ---------------------------------------------------------------------------
// Fixpoints on the Werner line

enum class Stability { attractive, repulsive, marginal };
const char* stability_name(Stability s);

struct BasinSample {
  double start = 0;
  bool converged = false;
  double limit = 0;
};

struct FixpointReport {
  double location = 0;
  Stability stability = Stability::marginal;
  double derivative = 0;  // dF'/dF at the fixpoint
  std::vector<BasinSample> basin;
};

struct ScanOptions {
  double lo = 0.25;
  double hi = 1.0;
  int grid = 600;
  double tolerance = 1e-10;
  int basin_samples = 12;
  int iteration_cap = 20000;
};

struct ScanResult {
  std::vector<FixpointReport> fixpoints;
  /// Basin starts that failed to settle within the iteration cap.
  std::vector<std::string> diagnostics;
};

ScanResult fixpoint_scan(const Stepper& step, const ScanOptions& options = {});

// ---------------------------------------------------------------------------
// Noise thresholds

enum class NoiseAxis { p1, p2, eta };
NoiseAxis parse_noise_axis(const std::string& name);
const char* noise_axis_name(NoiseAxis axis);

/// Largest F' - F over the Werner line (F in [1/4, 1]) and where it occurs.
std::pair<double, double> max_purification_gain(const Stepper& step);
/// A nontrivial attractive fixpoint above the repulsive one exists.
bool purifiable(const ApparatusNoise& noise, const NoisePlacement& placement = {});

struct ThresholdResult {
  NoiseAxis axis = NoiseAxis::p2;
  double critical = 1;     // smallest reliability that still purifies
  double lower = 0;        // bracket at termination
  double upper = 1;
  int iterations = 0;
  bool monotone = true;    // purifiability was monotone on the probe grid
};

/// Bisection on `axis` with the other reliabilities taken from `base`.
/// Throws NumericError when the end points do not bracket a change.
ThresholdResult threshold_search(NoiseAxis axis, const ApparatusNoise& base = {}, double tolerance = 1e-4,
                                 const NoisePlacement& placement = {});

}  // namespace qcomm
