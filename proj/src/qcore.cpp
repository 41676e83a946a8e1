#include "qcomm/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qcomm {

namespace {

using Index = Eigen::Index;

void check_register_size(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw QuantumError("register size " + std::to_string(n_qubits) + " outside [1, " +
                       std::to_string(kMaxQubits) + "]");
  }
}

std::uint64_t qubit_mask(int qubit, int n_qubits) {
  return std::uint64_t{1} << (n_qubits - 1 - qubit);
}

// Shared by StateVector (one column) and operators (every column).
template <typename M>
void left_apply_1q_impl(M& m, int qubit, int n_qubits, const Matrix2& u) {
  const std::uint64_t mask = qubit_mask(qubit, n_qubits);
  const auto dim = static_cast<std::uint64_t>(m.rows());
  for (Index c = 0; c < m.cols(); ++c) {
    for (std::uint64_t i0 = 0; i0 < dim; ++i0) {
      if (i0 & mask) continue;
      const auto r0 = static_cast<Index>(i0);
      const auto r1 = static_cast<Index>(i0 | mask);
      const Complex a = m(r0, c);
      const Complex b = m(r1, c);
      m(r0, c) = u(0, 0) * a + u(0, 1) * b;
      m(r1, c) = u(1, 0) * a + u(1, 1) * b;
    }
  }
}

template <typename M>
void left_apply_2q_impl(M& m, int q0, int q1, int n_qubits, const Matrix4& u) {
  const std::uint64_t m0 = qubit_mask(q0, n_qubits);
  const std::uint64_t m1 = qubit_mask(q1, n_qubits);
  const auto dim = static_cast<std::uint64_t>(m.rows());
  for (Index c = 0; c < m.cols(); ++c) {
    for (std::uint64_t base = 0; base < dim; ++base) {
      if (base & (m0 | m1)) continue;
      const std::array<Index, 4> rows = {
          static_cast<Index>(base), static_cast<Index>(base | m1),
          static_cast<Index>(base | m0), static_cast<Index>(base | m0 | m1)};
      std::array<Complex, 4> in;
      for (int k = 0; k < 4; ++k) in[k] = m(rows[k], c);
      for (int r = 0; r < 4; ++r) {
        Complex acc = 0;
        for (int k = 0; k < 4; ++k) acc += u(r, k) * in[k];
        m(rows[r], c) = acc;
      }
    }
  }
}

Matrix2 rot_x(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Matrix2 u;
  u << c, Complex(0, -s), Complex(0, -s), c;
  return u;
}

Matrix2 rot_y(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Matrix2 u;
  u << c, -s, s, c;
  return u;
}

Matrix4 controlled(const Matrix2& u) {
  Matrix4 m = Matrix4::Identity();
  m.block<2, 2>(2, 2) = u;
  return m;
}

void check_distinct(int a, int b) {
  if (a == b) throw QuantumError("two-qubit gate needs distinct qubits");
}

template <typename M>
void left_apply_gate(M& m, int n_qubits, const Gate& g) {
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, gate::CNOT>) {
          detail::check_qubit(op.control, n_qubits);
          detail::check_qubit(op.target, n_qubits);
          check_distinct(op.control, op.target);
          Matrix2 x = pauli_matrix(1);
          left_apply_2q_impl(m, op.control, op.target, n_qubits, controlled(x));
        } else if constexpr (std::is_same_v<T, gate::ControlledRotX>) {
          detail::check_qubit(op.control, n_qubits);
          detail::check_qubit(op.target, n_qubits);
          check_distinct(op.control, op.target);
          left_apply_2q_impl(m, op.control, op.target, n_qubits, controlled(rot_x(op.theta)));
        } else if constexpr (std::is_same_v<T, gate::Pauli>) {
          for (const auto& t : op.string.terms()) {
            detail::check_qubit(t.qubit, n_qubits);
            if (t.mu != 0) left_apply_1q_impl(m, t.qubit, n_qubits, pauli_matrix(t.mu));
          }
          m *= phase_value(op.string.phase());
        } else {
          detail::check_qubit(op.qubit, n_qubits);
          left_apply_1q_impl(m, op.qubit, n_qubits, detail::gate_matrix_1q(g));
        }
      },
      g);
}

Matrix bell_vectors() {
  // Columns in BellIndex order: Phi+, Psi+, Phi-, Psi-.
  const double h = std::numbers::sqrt2 / 2;
  Matrix v = Matrix::Zero(4, 4);
  v(0, 0) = h, v(3, 0) = h;
  v(1, 1) = h, v(2, 1) = h;
  v(0, 2) = h, v(3, 2) = -h;
  v(1, 3) = h, v(2, 3) = -h;
  return v;
}

std::vector<int> sorted_keep(std::span<const int> keep, int n_qubits) {
  if (keep.empty()) throw QuantumError("partial_trace: keep set is empty");
  std::vector<int> k(keep.begin(), keep.end());
  std::sort(k.begin(), k.end());
  if (std::adjacent_find(k.begin(), k.end()) != k.end())
    throw QuantumError("partial_trace: repeated qubit in keep set");
  for (int q : k) detail::check_qubit(q, n_qubits);
  return k;
}

// Full-register index offsets for every assignment of the kept qubits and
// of the traced-out qubits, so that full = kept[a] | rest[e].
std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>> split_offsets(
    const std::vector<int>& keep, int n_qubits) {
  std::vector<int> rest;
  for (int q = 0; q < n_qubits; ++q)
    if (!std::binary_search(keep.begin(), keep.end(), q)) rest.push_back(q);
  auto offsets = [&](const std::vector<int>& qs) {
    const std::size_t count = std::size_t{1} << qs.size();
    std::vector<std::uint64_t> out(count, 0);
    for (std::size_t a = 0; a < count; ++a) {
      for (std::size_t j = 0; j < qs.size(); ++j) {
        // Local bit j counts from the most significant (leftmost) qubit.
        if (a & (std::size_t{1} << (qs.size() - 1 - j))) out[a] |= qubit_mask(qs[j], n_qubits);
      }
    }
    return out;
  };
  return {offsets(keep), offsets(rest)};
}

}  // namespace

// ---------------------------------------------------------------------------

namespace detail {

void check_qubit(int qubit, int n_qubits) {
  if (qubit < 0 || qubit >= n_qubits) {
    throw QuantumError("qubit index " + std::to_string(qubit) + " out of range for " +
                       std::to_string(n_qubits) + "-qubit register");
  }
}

void left_apply_1q(Matrix& m, int qubit, int n_qubits, const Matrix2& u) {
  check_qubit(qubit, n_qubits);
  left_apply_1q_impl(m, qubit, n_qubits, u);
}

void left_apply_2q(Matrix& m, int q0, int q1, int n_qubits, const Matrix4& u) {
  check_qubit(q0, n_qubits);
  check_qubit(q1, n_qubits);
  check_distinct(q0, q1);
  left_apply_2q_impl(m, q0, q1, n_qubits, u);
}

void conjugate(Matrix& m, int n_qubits, const Gate& g) {
  left_apply_gate(m, n_qubits, g);
  m.adjointInPlace();
  left_apply_gate(m, n_qubits, g);
  m.adjointInPlace();
}

void conjugate_pauli(Matrix& m, int n_qubits, std::span<const PauliTerm> terms) {
  for (const auto& t : terms) {
    if (t.mu == 0) continue;
    check_qubit(t.qubit, n_qubits);
    const Matrix2& p = pauli_matrix(t.mu);
    left_apply_1q_impl(m, t.qubit, n_qubits, p);
    m.adjointInPlace();
    left_apply_1q_impl(m, t.qubit, n_qubits, p);
    m.adjointInPlace();
  }
}

Matrix partial_trace(const Matrix& m, int n_qubits, std::span<const int> keep) {
  const auto k = sorted_keep(keep, n_qubits);
  const auto [kept, rest] = split_offsets(k, n_qubits);
  const auto dk = static_cast<Index>(kept.size());
  Matrix out = Matrix::Zero(dk, dk);
  for (Index a = 0; a < dk; ++a) {
    for (Index b = 0; b < dk; ++b) {
      Complex acc = 0;
      for (std::uint64_t e : rest) {
        acc += m(static_cast<Index>(kept[a] | e), static_cast<Index>(kept[b] | e));
      }
      out(a, b) = acc;
    }
  }
  return out;
}

Matrix identity_tensor(const Matrix& reduced, int n_qubits, std::span<const int> keep) {
  const auto k = sorted_keep(keep, n_qubits);
  const auto [kept, rest] = split_offsets(k, n_qubits);
  if (reduced.rows() != static_cast<Index>(kept.size()))
    throw QuantumError("identity_tensor: reduced operator has wrong dimension");
  const Index dim = Index{1} << n_qubits;
  Matrix out = Matrix::Zero(dim, dim);
  for (std::uint64_t e : rest) {
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = 0; b < kept.size(); ++b) {
        out(static_cast<Index>(kept[a] | e), static_cast<Index>(kept[b] | e)) =
            reduced(static_cast<Index>(a), static_cast<Index>(b));
      }
    }
  }
  return out;
}

Matrix z_project(const Matrix& m, int qubit, int n_qubits, int outcome) {
  check_qubit(qubit, n_qubits);
  if (outcome != 0 && outcome != 1) throw QuantumError("z outcome must be 0 or 1");
  const std::uint64_t mask = qubit_mask(qubit, n_qubits);
  Matrix out = m;
  for (Index i = 0; i < out.rows(); ++i) {
    const bool keep_i = ((static_cast<std::uint64_t>(i) & mask) != 0) == (outcome == 1);
    if (keep_i) continue;
    out.row(i).setZero();
    out.col(i).setZero();
  }
  return out;
}

Matrix2 gate_matrix_1q(const Gate& g) {
  if (const auto* h = std::get_if<gate::Hadamard>(&g)) {
    (void)h;
    const double s = std::numbers::sqrt2 / 2;
    Matrix2 u;
    u << s, s, s, -s;
    return u;
  }
  if (const auto* r = std::get_if<gate::RotX>(&g)) return rot_x(r->theta);
  if (const auto* r = std::get_if<gate::RotY>(&g)) return rot_y(r->theta);
  if (const auto* s = std::get_if<gate::Single>(&g)) {
    if (!(s->u * s->u.adjoint()).isApprox(Matrix2::Identity(), 1e-10))
      throw QuantumError("gate::Single matrix is not unitary");
    return s->u;
  }
  throw QuantumError("gate_matrix_1q: not a single-qubit gate");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
  check_register_size(n_qubits);
  amplitudes_ = Vector::Zero(Index{1} << n_qubits);
  amplitudes_(0) = 1;
}

StateVector::StateVector(int n_qubits, Vector amplitudes)
    : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {
  check_register_size(n_qubits);
  if (amplitudes_.size() != (Index{1} << n_qubits))
    throw QuantumError("state vector length is not 2^n_qubits");
  if (std::abs(amplitudes_.norm() - 1.0) > kStateTolerance)
    throw QuantumError("state vector is not normalized");
}

StateVector StateVector::basis(int n_qubits, std::uint64_t index) {
  check_register_size(n_qubits);
  if (index >= (std::uint64_t{1} << n_qubits)) throw QuantumError("basis index out of range");
  Vector v = Vector::Zero(Index{1} << n_qubits);
  v(static_cast<Index>(index)) = 1;
  return StateVector(n_qubits, std::move(v));
}

StateVector StateVector::from_bits(std::string_view bits) {
  std::uint64_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw QuantumError("bit string may only contain 0 and 1");
    index = (index << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return basis(static_cast<int>(bits.size()), index);
}

StateVector StateVector::normalized(int n_qubits, Vector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0)) throw QuantumError("cannot normalize the zero vector");
  amplitudes /= norm;
  return StateVector(n_qubits, std::move(amplitudes));
}

StateVector StateVector::tensor(const StateVector& other) const {
  const int n = n_qubits_ + other.n_qubits_;
  check_register_size(n);
  Vector v(amplitudes_.size() * other.amplitudes_.size());
  for (Index i = 0; i < amplitudes_.size(); ++i)
    v.segment(i * other.amplitudes_.size(), other.amplitudes_.size()) =
        amplitudes_(i) * other.amplitudes_;
  return normalized(n, std::move(v));
}

// ---------------------------------------------------------------------------
// DensityOperator

DensityOperator::DensityOperator(int n_qubits) : n_qubits_(n_qubits) {
  check_register_size(n_qubits);
  const Index dim = Index{1} << n_qubits;
  matrix_ = Matrix::Zero(dim, dim);
  matrix_(0, 0) = 1;
}

DensityOperator::DensityOperator(int n_qubits, Matrix matrix)
    : n_qubits_(n_qubits), matrix_(std::move(matrix)) {
  check_register_size(n_qubits);
  const Index dim = Index{1} << n_qubits;
  if (matrix_.rows() != dim || matrix_.cols() != dim)
    throw QuantumError("density matrix is not 2^n x 2^n");
  if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > kStateTolerance)
    throw QuantumError("density matrix is not Hermitian");
  if (std::abs(matrix_.trace() - Complex(1.0)) > kStateTolerance)
    throw QuantumError("density matrix trace differs from 1");
  // Hermitian part only, so downstream eigen-solvers see exact symmetry.
  matrix_ = (0.5 * (matrix_ + matrix_.adjoint())).eval();
}

DensityOperator::DensityOperator(const StateVector& pure)
    : DensityOperator(pure.n_qubits(), pure.amplitudes() * pure.amplitudes().adjoint()) {}

DensityOperator DensityOperator::maximally_mixed(int n_qubits) {
  check_register_size(n_qubits);
  const Index dim = Index{1} << n_qubits;
  return DensityOperator(n_qubits, Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityOperator DensityOperator::normalized(int n_qubits, Matrix matrix) {
  const Complex tr = matrix.trace();
  if (!(tr.real() > 0)) throw QuantumError("cannot normalize an operator with zero trace");
  matrix /= tr.real();
  return DensityOperator(n_qubits, std::move(matrix));
}

DensityOperator DensityOperator::tensor(const DensityOperator& other) const {
  const int n = n_qubits_ + other.n_qubits_;
  check_register_size(n);
  const Index da = matrix_.rows(), db = other.matrix_.rows();
  Matrix m(da * db, da * db);
  for (Index i = 0; i < da; ++i)
    for (Index j = 0; j < da; ++j) m.block(i * db, j * db, db, db) = matrix_(i, j) * other.matrix_;
  return DensityOperator(n, std::move(m));
}

double DensityOperator::purity() const { return (matrix_ * matrix_).trace().real(); }

double DensityOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool DensityOperator::is_physical() const { return min_eigenvalue() >= -kEigenTolerance; }

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  if (a.n_qubits() != b.n_qubits()) throw QuantumError("trace_distance: dimension mismatch");
  Matrix diff = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(diff, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Pauli strings

Complex phase_value(Phase p) {
  switch (p) {
    case Phase::PlusOne: return {1, 0};
    case Phase::MinusOne: return {-1, 0};
    case Phase::PlusI: return {0, 1};
    case Phase::MinusI: return {0, -1};
  }
  return {1, 0};
}

const Matrix2& pauli_matrix(int mu) {
  static const std::array<Matrix2, 4> paulis = [] {
    std::array<Matrix2, 4> p;
    p[0] << 1, 0, 0, 1;
    p[1] << 0, 1, 1, 0;
    p[2] << 0, Complex(0, -1), Complex(0, 1), 0;
    p[3] << 1, 0, 0, -1;
    return p;
  }();
  if (mu < 0 || mu > 3) throw QuantumError("Pauli index must be in 0..3");
  return paulis[static_cast<std::size_t>(mu)];
}

PauliString::PauliString(std::vector<PauliTerm> terms, Phase phase)
    : terms_(std::move(terms)), phase_(phase) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].mu < 0 || terms_[i].mu > 3) throw QuantumError("Pauli index must be in 0..3");
    if (terms_[i].qubit < 0) throw QuantumError("negative qubit index in Pauli string");
    for (std::size_t j = 0; j < i; ++j)
      if (terms_[i].qubit == terms_[j].qubit)
        throw QuantumError("Pauli string repeats qubit " + std::to_string(terms_[i].qubit));
  }
}

PauliString PauliString::parse(std::string_view letters) {
  std::vector<PauliTerm> terms;
  for (std::size_t q = 0; q < letters.size(); ++q) {
    int mu;
    switch (letters[q]) {
      case 'I': mu = 0; break;
      case 'X': mu = 1; break;
      case 'Y': mu = 2; break;
      case 'Z': mu = 3; break;
      default: throw QuantumError("Pauli letters must be I, X, Y or Z");
    }
    if (mu != 0) terms.push_back({static_cast<int>(q), mu});
  }
  return PauliString(std::move(terms));
}

int PauliString::max_qubit() const {
  int m = -1;
  for (const auto& t : terms_) m = std::max(m, t.qubit);
  return m;
}

bool PauliString::commutes_with(const PauliString& other) const {
  int anti = 0;
  for (const auto& a : terms_)
    for (const auto& b : other.terms_)
      if (a.qubit == b.qubit && a.mu != 0 && b.mu != 0 && a.mu != b.mu) ++anti;
  return anti % 2 == 0;
}

// ---------------------------------------------------------------------------
// Gates

StateVector apply_unitary(const StateVector& state, const Gate& g) {
  Vector v = state.amplitudes();
  left_apply_gate(v, state.n_qubits(), g);
  return StateVector(state.n_qubits(), std::move(v));
}

DensityOperator apply_unitary(const DensityOperator& rho, const Gate& g) {
  Matrix m = rho.matrix();
  detail::conjugate(m, rho.n_qubits(), g);
  return DensityOperator(rho.n_qubits(), std::move(m));
}

StateVector apply_circuit(StateVector state, std::span<const Gate> gates) {
  Vector v = state.amplitudes();
  for (const auto& g : gates) left_apply_gate(v, state.n_qubits(), g);
  return StateVector(state.n_qubits(), std::move(v));
}

DensityOperator apply_circuit(DensityOperator rho, std::span<const Gate> gates) {
  Matrix m = rho.matrix();
  for (const auto& g : gates) detail::conjugate(m, rho.n_qubits(), g);
  return DensityOperator(rho.n_qubits(), std::move(m));
}

// ---------------------------------------------------------------------------
// Bell basis

const char* bell_name(BellIndex b) {
  static const char* names[] = {"Phi+", "Psi+", "Phi-", "Psi-"};
  return names[b.value()];
}

StateVector bell_state(BellIndex b) {
  static const Matrix v = bell_vectors();
  return StateVector(2, v.col(b.value()));
}

StateVector bell_product(std::span<const BellIndex> pairs) {
  if (pairs.empty()) throw QuantumError("bell_product: no pairs");
  StateVector out = bell_state(pairs[0]);
  for (std::size_t j = 1; j < pairs.size(); ++j) out = out.tensor(bell_state(pairs[j]));
  return out;
}

Matrix4 bell_basis_matrix(const DensityOperator& rho) {
  if (rho.n_qubits() != 2) throw QuantumError("Bell decomposition needs a 2-qubit operator");
  static const Matrix v = bell_vectors();
  return Matrix4(v.adjoint() * rho.matrix() * v);
}

BellDecomposition bell_decompose(const DensityOperator& rho) {
  const Matrix4 m = bell_basis_matrix(rho);
  BellDecomposition d;
  d.A = m(kPhiPlus.value(), kPhiPlus.value()).real();
  d.B = m(kPsiMinus.value(), kPsiMinus.value()).real();
  d.C = m(kPsiPlus.value(), kPsiPlus.value()).real();
  d.D = m(kPhiMinus.value(), kPhiMinus.value()).real();
  double off = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = r + 1; c < 4; ++c) off += std::norm(m(r, c));
  d.offdiag_norm = std::sqrt(off);
  return d;
}

DensityOperator bell_diagonal_part(const DensityOperator& rho) {
  static const Matrix v = bell_vectors();
  const Matrix4 m = bell_basis_matrix(rho);
  Matrix diag = Matrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k) diag(k, k) = m(k, k);
  return DensityOperator(2, v * diag * v.adjoint());
}

DensityOperator bilateral_pauli_twirl(const DensityOperator& rho, int a, int b) {
  check_distinct(a, b);
  Matrix acc = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (int k = 0; k < 4; ++k) {
    Matrix m = rho.matrix();
    const std::array<PauliTerm, 2> terms{PauliTerm{a, k}, PauliTerm{b, k}};
    detail::conjugate_pauli(m, rho.n_qubits(), terms);
    acc += m;
  }
  return DensityOperator(rho.n_qubits(), acc / 4.0);
}

// ---------------------------------------------------------------------------
// Reductions and measurement

DensityOperator partial_trace(const DensityOperator& rho, std::span<const int> keep) {
  const auto k = sorted_keep(keep, rho.n_qubits());
  return DensityOperator(static_cast<int>(k.size()),
                         detail::partial_trace(rho.matrix(), rho.n_qubits(), keep));
}

DensityOperator partial_trace(const StateVector& psi, std::span<const int> keep) {
  const auto k = sorted_keep(keep, psi.n_qubits());
  const auto [kept, rest] = split_offsets(k, psi.n_qubits());
  const auto dk = static_cast<Index>(kept.size());
  Matrix out = Matrix::Zero(dk, dk);
  for (std::uint64_t e : rest) {
    for (Index a = 0; a < dk; ++a) {
      const Complex pa = psi[kept[a] | e];
      if (pa == Complex(0)) continue;
      for (Index b = 0; b < dk; ++b) out(a, b) += pa * std::conj(psi[kept[b] | e]);
    }
  }
  return DensityOperator(static_cast<int>(k.size()), std::move(out));
}

double z_probability(const StateVector& psi, int qubit, int outcome) {
  detail::check_qubit(qubit, psi.n_qubits());
  const std::uint64_t mask = qubit_mask(qubit, psi.n_qubits());
  double p = 0;
  for (std::uint64_t i = 0; i < psi.dim(); ++i)
    if (((i & mask) != 0) == (outcome == 1)) p += psi.probability(i);
  return p;
}

double z_probability(const DensityOperator& rho, int qubit, int outcome) {
  detail::check_qubit(qubit, rho.n_qubits());
  const std::uint64_t mask = qubit_mask(qubit, rho.n_qubits());
  double p = 0;
  for (std::uint64_t i = 0; i < rho.dim(); ++i)
    if (((i & mask) != 0) == (outcome == 1)) p += rho(i, i).real();
  return p;
}

namespace {
constexpr double kZeroBranch = 1e-14;
}

StateVector project_z(const StateVector& psi, int qubit, int outcome) {
  const double p = z_probability(psi, qubit, outcome);
  if (p < kZeroBranch) throw QuantumError("requested measurement branch has zero probability");
  const std::uint64_t mask = qubit_mask(qubit, psi.n_qubits());
  Vector v = psi.amplitudes();
  for (Index i = 0; i < v.size(); ++i)
    if (((static_cast<std::uint64_t>(i) & mask) != 0) != (outcome == 1)) v(i) = 0;
  return StateVector::normalized(psi.n_qubits(), std::move(v));
}

DensityOperator project_z(const DensityOperator& rho, int qubit, int outcome) {
  const double p = z_probability(rho, qubit, outcome);
  if (p < kZeroBranch) throw QuantumError("requested measurement branch has zero probability");
  return DensityOperator::normalized(rho.n_qubits(),
                                     detail::z_project(rho.matrix(), qubit, rho.n_qubits(), outcome));
}

Measurement<StateVector> measure_z(const StateVector& psi, int qubit, Rng& rng) {
  const double p0 = z_probability(psi, qubit, 0);
  const int outcome = uniform01(rng) < p0 ? 0 : 1;
  return {outcome, project_z(psi, qubit, outcome)};
}

Measurement<DensityOperator> measure_z(const DensityOperator& rho, int qubit, Rng& rng) {
  const double p0 = z_probability(rho, qubit, 0);
  const int outcome = uniform01(rng) < p0 ? 0 : 1;
  return {outcome, project_z(rho, qubit, outcome)};
}

double fidelity(const DensityOperator& rho, const StateVector& target) {
  if (rho.n_qubits() != target.n_qubits()) throw QuantumError("fidelity: dimension mismatch");
  const double f = (target.amplitudes().adjoint() * rho.matrix() * target.amplitudes())(0, 0).real();
  return std::clamp(f, 0.0, 1.0);
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) throw QuantumError("fidelity: dimension mismatch");
  return std::clamp(std::norm(a.amplitudes().dot(b.amplitudes())), 0.0, 1.0);
}

}  // namespace qcomm
