#pragma once

// Noise channels: local depolarization after a gate, the unreliable z
// measurement, the correlated two-qubit Pauli channel acting on Alice's two
// qubits, and its binary (identity / spin flip) restriction.

#include <array>
#include <optional>
#include <span>
#include <utility>

#include "qcomm/qcore.hpp"
#include "qcomm/random.hpp"

namespace qcomm {

/// Joint distribution f[mu][nu] of the Paulis sigma_mu (first qubit) and
/// sigma_nu (second qubit), mu, nu in 0..3.
class PauliNoiseSpec {
 public:
  using Table = std::array<std::array<double, 4>, 4>;

  /// Throws if an entry is negative or the total differs from 1 by > 1e-12.
  explicit PauliNoiseSpec(const Table& f);

  static PauliNoiseSpec noiseless();
  /// Divides a nonnegative table by its total.
  static PauliNoiseSpec normalized(Table f);
  /// f[mu][nu] = single[mu] * single[nu].
  static PauliNoiseSpec factorized(const std::array<double, 4>& single);
  static PauliNoiseSpec uniform();

  const Table& table() const { return f_; }
  double operator()(int mu, int nu) const { return f_[mu][nu]; }

 private:
  Table f_;
};

/// Identity / sigma_x only restriction: f[mu][nu], mu, nu in {0, 1}.
class BinaryNoiseSpec {
 public:
  using Table = std::array<std::array<double, 2>, 2>;

  explicit BinaryNoiseSpec(const Table& f);
  /// Uncorrelated flips: f[mu][nu] = f_mu f_nu with f_0 = f0, f_1 = 1 - f0.
  static BinaryNoiseSpec factorized(double f0);

  double f00() const { return f_[0][0]; }
  double f01() const { return f_[0][1]; }
  double f10() const { return f_[1][0]; }
  double f11() const { return f_[1][1]; }
  /// Single-flip weight f01 + f10.
  double fs() const { return f_[0][1] + f_[1][0]; }
  const Table& table() const { return f_; }

  /// Embedding into the Pauli channel with index 1 = sigma_x.
  PauliNoiseSpec to_pauli() const;
  /// f0 when the table factorizes as f_mu f_nu with equal marginals.
  std::optional<double> factorized_f0(double tol = 1e-12) const;

 private:
  Table f_;
};

/// Reliabilities of one-qubit gates (p1), two-qubit gates (p2) and of the
/// z measurement (eta).
struct ApparatusNoise {
  double p1 = 1.0;
  double p2 = 1.0;
  double eta = 1.0;

  static ApparatusNoise perfect() { return {}; }
  /// p1, p2 in [0, 1]; eta in [1/2, 1].
  void validate() const;
  bool operator==(const ApparatusNoise&) const = default;
};

/// p rho + (1 - p)/d 1_A (x) tr_A rho on the listed qubits (d = 2^|A|).
DensityOperator depolarize(const DensityOperator& rho, double p, std::span<const int> subsystem);
/// depolarize(U rho U^dagger). The gate must act inside `subsystem`.
DensityOperator depolarize_after(const DensityOperator& rho, const Gate& g, double p,
                                 std::span<const int> subsystem);

/// POVM M0 = eta|0><0| + (1-eta)|1><1|, M1 = 1 - M0.
double povm_probability(const DensityOperator& rho, int qubit, double eta, int reported);
/// Reported bit sampled with tr(M_j rho); the post state uses the Kraus
/// operator sqrt(M_j).
Measurement<DensityOperator> povm_measure(const DensityOperator& rho, int qubit, double eta,
                                          Rng& rng);

/// sum f[mu][nu] sigma_mu^(a1) sigma_nu^(a2) rho (...)^dagger.
DensityOperator correlated_pauli(const DensityOperator& rho, const PauliNoiseSpec& spec, int a1,
                                 int a2);
DensityOperator correlated_flip(const DensityOperator& rho, const BinaryNoiseSpec& spec, int a1,
                                int a2);
/// Single-qubit Pauli channel with weights w[mu].
DensityOperator pauli_channel(const DensityOperator& rho, const std::array<double, 4>& w,
                              int qubit);

/// Draw (mu, nu) from the table by inverse CDF in row-major order.
std::pair<int, int> sample_pauli_pair(const PauliNoiseSpec& spec, Rng& rng);
std::pair<int, int> sample_pauli_pair(const BinaryNoiseSpec& spec, Rng& rng);

namespace detail {

Matrix depolarize(const Matrix& m, int n_qubits, double p, std::span<const int> subsystem);
Matrix correlated_pauli(const Matrix& m, int n_qubits, const PauliNoiseSpec& spec, int a1, int a2);
/// Unnormalized POVM branch sqrt(M_j) m sqrt(M_j).
Matrix povm_branch(const Matrix& m, int qubit, int n_qubits, double eta, int reported);

}  // namespace detail

}  // namespace qcomm
