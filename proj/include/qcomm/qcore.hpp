#pragma once

// Dense statevector / density-operator engine for small qubit registers.
//
// Qubit ordering: qubit 0 is the leftmost tensor factor, so in a register of
// n qubits, qubit q corresponds to bit (n - 1 - q) of the basis index.
// |q0 q1 ... q_{n-1}> has index q0 * 2^{n-1} + ... + q_{n-1}.

#include <array>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qcomm/random.hpp"

namespace qcomm {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

inline constexpr int kMaxQubits = 12;
inline constexpr double kStateTolerance = 1e-12;
inline constexpr double kEigenTolerance = 1e-10;

/// Thrown for malformed states, out-of-range qubit indices and dimension
/// mismatches.
class QuantumError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterations that fail to converge, empty brackets and degenerate
/// normalizations.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateVector {
 public:
  /// |0...0> on n qubits.
  explicit StateVector(int n_qubits);
  /// Validates length 2^n and unit norm (within 1e-12).
  StateVector(int n_qubits, Vector amplitudes);

  static StateVector basis(int n_qubits, std::uint64_t index);
  /// "0110" style bit string, leftmost character is qubit 0.
  static StateVector from_bits(std::string_view bits);
  /// Normalizes first; throws on the zero vector.
  static StateVector normalized(int n_qubits, Vector amplitudes);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const Vector& amplitudes() const { return amplitudes_; }
  Complex operator[](std::size_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

  StateVector tensor(const StateVector& other) const;
  double probability(std::uint64_t index) const { return std::norm((*this)[index]); }

 private:
  int n_qubits_;
  Vector amplitudes_;
};

/// Density operator with Hermiticity and unit trace enforced at construction
/// (1e-12). Positivity is checked on demand with is_physical(); eigenvalue
/// decompositions are too costly to run on every intermediate state.
class DensityOperator {
 public:
  explicit DensityOperator(int n_qubits);  // |0...0><0...0|
  DensityOperator(int n_qubits, Matrix matrix);
  explicit DensityOperator(const StateVector& pure);

  static DensityOperator maximally_mixed(int n_qubits);
  /// Divides by the trace; throws if the trace is not positive.
  static DensityOperator normalized(int n_qubits, Matrix matrix);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Matrix& matrix() const { return matrix_; }
  Complex operator()(std::size_t r, std::size_t c) const {
    return matrix_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }

  DensityOperator tensor(const DensityOperator& other) const;
  double purity() const;
  double min_eigenvalue() const;
  /// Hermitian, unit trace and all eigenvalues >= -1e-10.
  bool is_physical() const;

 private:
  int n_qubits_;
  Matrix matrix_;
};

/// Trace distance 1/2 ||a - b||_1.
double trace_distance(const DensityOperator& a, const DensityOperator& b);

// ---------------------------------------------------------------------------
// Pauli strings

enum class Phase : std::uint8_t { PlusOne, MinusOne, PlusI, MinusI };

Complex phase_value(Phase p);

/// mu = 0 identity, 1 sigma_x, 2 sigma_y, 3 sigma_z.
const Matrix2& pauli_matrix(int mu);

struct PauliTerm {
  int qubit;
  int mu;
};

class PauliString {
 public:
  PauliString() = default;
  /// Throws on repeated qubit indices or mu outside 0..3.
  PauliString(std::vector<PauliTerm> terms, Phase phase = Phase::PlusOne);

  static PauliString single(int qubit, int mu) { return PauliString({{qubit, mu}}); }
  /// 'I','X','Y','Z' per qubit, leftmost character is qubit 0.
  static PauliString parse(std::string_view letters);

  const std::vector<PauliTerm>& terms() const { return terms_; }
  Phase phase() const { return phase_; }
  /// Highest qubit index touched, or -1 for the identity.
  int max_qubit() const;
  bool commutes_with(const PauliString& other) const;

 private:
  std::vector<PauliTerm> terms_;
  Phase phase_ = Phase::PlusOne;
};

// ---------------------------------------------------------------------------
// Gates

namespace gate {

struct CNOT {
  int control;
  int target;
};
struct Hadamard {
  int qubit;
};
/// exp(-i theta sigma_x / 2).
struct RotX {
  int qubit;
  double theta;
};
/// exp(-i theta sigma_y / 2).
struct RotY {
  int qubit;
  double theta;
};
/// RotX on target, conditioned on control = |1>.
struct ControlledRotX {
  int control;
  int target;
  double theta;
};
struct Pauli {
  PauliString string;
};
/// Arbitrary 2x2 unitary on one qubit (unitarity checked on application).
struct Single {
  int qubit;
  Matrix2 u;
};

}  // namespace gate

using Gate = std::variant<gate::CNOT, gate::Hadamard, gate::RotX, gate::RotY,
                          gate::ControlledRotX, gate::Pauli, gate::Single>;

StateVector apply_unitary(const StateVector& state, const Gate& g);
DensityOperator apply_unitary(const DensityOperator& rho, const Gate& g);
StateVector apply_circuit(StateVector state, std::span<const Gate> gates);
DensityOperator apply_circuit(DensityOperator rho, std::span<const Gate> gates);

// ---------------------------------------------------------------------------
// Bell basis

/// Two-bit Bell label mu = (phase bit, parity bit):
///   00 -> Phi+, 01 -> Psi+, 10 -> Phi-, 11 -> Psi-.
/// A sigma_x on one half flips the parity bit, sigma_z flips the phase bit.
class BellIndex {
 public:
  constexpr BellIndex() = default;
  constexpr explicit BellIndex(int value) : value_(static_cast<std::uint8_t>(value & 3)) {
    if (value < 0 || value > 3) throw QuantumError("BellIndex out of range");
  }
  static constexpr BellIndex from_bits(int phase_bit, int parity_bit) {
    return BellIndex((phase_bit << 1) | parity_bit);
  }
  constexpr int value() const { return value_; }
  constexpr int phase_bit() const { return value_ >> 1; }
  constexpr int parity_bit() const { return value_ & 1; }
  constexpr bool operator==(const BellIndex&) const = default;

 private:
  std::uint8_t value_ = 0;
};

inline constexpr BellIndex kPhiPlus{0};
inline constexpr BellIndex kPsiPlus{1};
inline constexpr BellIndex kPhiMinus{2};
inline constexpr BellIndex kPsiMinus{3};

const char* bell_name(BellIndex b);

StateVector bell_state(BellIndex b);
/// Product of Bell pairs; pair j occupies qubits (2j, 2j+1).
StateVector bell_product(std::span<const BellIndex> pairs);

/// Bell-diagonal weights in the purification ordering A (Phi+),
/// B (Psi-), C (Psi+), D (Phi-). offdiag_norm is the Frobenius norm of the
/// strictly upper-triangular Bell-basis entries (each coherence counted once).
struct BellDecomposition {
  double A = 0, B = 0, C = 0, D = 0;
  double offdiag_norm = 0;
};

BellDecomposition bell_decompose(const DensityOperator& rho);
/// The 2-qubit density matrix expressed in the Bell basis, rows/columns in
/// BellIndex order (Phi+, Psi+, Phi-, Psi-).
Matrix4 bell_basis_matrix(const DensityOperator& rho);
/// Drops all Bell-basis coherences.
DensityOperator bell_diagonal_part(const DensityOperator& rho);
/// Average of sigma_k (x) sigma_k rho sigma_k (x) sigma_k over k = 0..3 on
/// qubits (a, b).
DensityOperator bilateral_pauli_twirl(const DensityOperator& rho, int a, int b);

// ---------------------------------------------------------------------------
// Reductions and measurement

DensityOperator partial_trace(const DensityOperator& rho, std::span<const int> keep);
DensityOperator partial_trace(const StateVector& psi, std::span<const int> keep);
inline DensityOperator partial_trace(const DensityOperator& rho, std::initializer_list<int> keep) {
  return partial_trace(rho, std::span<const int>(keep.begin(), keep.size()));
}
inline DensityOperator partial_trace(const StateVector& psi, std::initializer_list<int> keep) {
  return partial_trace(psi, std::span<const int>(keep.begin(), keep.size()));
}

/// Probability of reading `outcome` in the sigma_z basis on `qubit`.
double z_probability(const StateVector& psi, int qubit, int outcome);
double z_probability(const DensityOperator& rho, int qubit, int outcome);

/// Projects on the given outcome and renormalizes. Throws if the branch has
/// (numerically) zero probability.
StateVector project_z(const StateVector& psi, int qubit, int outcome);
DensityOperator project_z(const DensityOperator& rho, int qubit, int outcome);

template <typename State>
struct Measurement {
  int outcome;
  State state;
};

Measurement<StateVector> measure_z(const StateVector& psi, int qubit, Rng& rng);
Measurement<DensityOperator> measure_z(const DensityOperator& rho, int qubit, Rng& rng);

/// <target| rho |target>.
double fidelity(const DensityOperator& rho, const StateVector& target);
/// |<a|b>|^2.
double fidelity(const StateVector& a, const StateVector& b);

namespace detail {

// Raw-matrix kernels shared by the channel and protocol code. They operate
// on unnormalized operators, so no invariants are enforced.
void check_qubit(int qubit, int n_qubits);
void left_apply_1q(Matrix& m, int qubit, int n_qubits, const Matrix2& u);
void left_apply_2q(Matrix& m, int q0, int q1, int n_qubits, const Matrix4& u);
/// m -> U m U^dagger for the given gate.
void conjugate(Matrix& m, int n_qubits, const Gate& g);
/// m -> P m P^dagger for a Pauli string (phase drops out).
void conjugate_pauli(Matrix& m, int n_qubits, std::span<const PauliTerm> terms);
Matrix partial_trace(const Matrix& m, int n_qubits, std::span<const int> keep);
/// Embeds `reduced` (acting on `keep`) as 1_rest (x) reduced, preserving the
/// original qubit positions.
Matrix identity_tensor(const Matrix& reduced, int n_qubits, std::span<const int> keep);
/// Keeps the block where `qubit` reads `outcome` (P m P), no renormalization.
Matrix z_project(const Matrix& m, int qubit, int n_qubits, int outcome);
Matrix2 gate_matrix_1q(const Gate& g);

}  // namespace detail

}  // namespace qcomm
