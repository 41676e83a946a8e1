#pragma once

// Nine-qubit Shor code on 0-based qubits (1-based qubit j is index j - 1).
// Blocks are {0,1,2}, {3,4,5}, {6,7,8}; qubit 0 carries the
// logical state before encoding and after decoding.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcomm/qcore.hpp"
#include "qcomm/random.hpp"

namespace qcomm::shor {

inline constexpr int kCodeQubits = 9;

struct LogicalQubit {
  Complex alpha = 1;
  Complex beta = 0;
  /// Throws QuantumError unless |alpha|^2 + |beta|^2 = 1 within 1e-12.
  void validate() const;
  StateVector state() const;
};

/// Eigenvalue bits of M1..M8 (0 for +1, 1 for -1).
struct Syndrome {
  std::array<std::uint8_t, 8> bits{};
  bool is_zero() const;
  std::string str() const;  // "00000000", M1 first
  auto operator<=>(const Syndrome&) const = default;
};

/// A syndrome that matches no single-qubit error.
class UncorrectableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// M1..M8: Z1Z2, Z2Z3, Z4Z5, Z5Z6, Z7Z8, Z8Z9, X1..X6, X4..X9.
const std::array<PauliString, 8>& stabilizers();

/// H / CNOT network mapping (a|0> + b|1>)|0...0> onto a|0>_S + b|1>_S.
std::vector<Gate> encoding_circuit();
std::vector<Gate> decoding_circuit();

StateVector encode(const LogicalQubit& q);
/// |0>_S (bit = 0) or |1>_S (bit = 1).
StateVector codeword(int bit);

/// sigma_mu on `qubit`; identity for mu = 0.
StateVector inject(const StateVector& state, int qubit, int mu);

/// <psi| M_i |psi> for each stabilizer. The register may hold extra qubits
/// beyond the nine code qubits.
std::array<double, 8> stabilizer_expectations(const StateVector& state);

struct SyndromeBranch {
  Syndrome syndrome;
  double probability = 0;
  StateVector state{kCodeQubits};  // projected and renormalized
};

/// Sequential projective measurement of M1..M8.
SyndromeBranch measure_syndrome(const StateVector& state, Rng& rng);
/// Every outcome with probability above 1e-14, in lexicographic order.
std::vector<SyndromeBranch> syndrome_distribution(const StateVector& state);

struct Correction {
  int qubit = -1;  // -1 for the identity
  int mu = 0;
};

/// Syndrome -> correction, built by injecting all 27 single-qubit Paulis into
/// |0>_S; among errors sharing a syndrome the smallest (qubit, mu) wins.
const std::map<Syndrome, Correction>& correction_table();

/// Applies the tabulated correction. Throws UncorrectableError for
/// syndromes outside the table.
StateVector correct(const StateVector& state, const Syndrome& s);

struct Decoded {
  StateVector logical{1};        // state of qubit 0 after the inverse network
  std::array<std::uint8_t, 8> register_bits{};  // qubits 1..8 after decoding
  Syndrome syndrome;             // stabilizer syndrome of the input
};

/// Inverse network followed by a product check. Throws UncorrectableError
/// when qubits 1..8 are not left in a single basis state (residual
/// entanglement with the logical qubit).
Decoded decode(const StateVector& state);

struct RoundTrip {
  Correction error;
  Syndrome syndrome;
  double fidelity = 0;
};

/// encode -> inject -> measure_syndrome -> correct -> decode for the
/// identity and all 27 single-qubit Paulis.
std::vector<RoundTrip> roundtrip_all(const LogicalQubit& q, Rng& rng);

struct DigitalizationBranch {
  Syndrome syndrome;
  double probability = 0;
  double system_purity = 0;  // of the nine code qubits, environment traced out
};

/// Environment qubit (index 9) in |+> drives a controlled x rotation by
/// `theta` on `code_qubit`; the code register is then syndrome-projected.
std::vector<DigitalizationBranch> digitalization_demo(const LogicalQubit& q, int code_qubit, double theta);

}  // namespace qcomm::shor
