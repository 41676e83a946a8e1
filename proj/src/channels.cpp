#include "qcomm/channels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qcomm {

namespace {

constexpr double kNormTolerance = 1e-12;

template <std::size_t N>
void check_distribution(const std::array<std::array<double, N>, N>& f, const char* what) {
  double total = 0;
  for (const auto& row : f) {
    for (double x : row) {
      if (!(x >= 0)) throw QuantumError(std::string(what) + ": negative or NaN probability");
      total += x;
    }
  }
  if (std::abs(total - 1.0) > kNormTolerance)
    throw QuantumError(std::string(what) + ": probabilities sum to " + std::to_string(total));
}

void check_reliability(double p, const char* name) {
  if (!(p >= 0 && p <= 1))
    throw QuantumError(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
}

void check_eta(double eta) {
  if (!(eta >= 0.5 && eta <= 1))
    throw QuantumError("eta must lie in [1/2, 1], got " + std::to_string(eta));
}

std::vector<int> gate_qubits(const Gate& g) {
  return std::visit(
      [](const auto& op) -> std::vector<int> {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, gate::CNOT> || std::is_same_v<T, gate::ControlledRotX>) {
          return {op.control, op.target};
        } else if constexpr (std::is_same_v<T, gate::Pauli>) {
          std::vector<int> q;
          for (const auto& t : op.string.terms()) q.push_back(t.qubit);
          return q;
        } else {
          return {op.qubit};
        }
      },
      g);
}

}  // namespace

// ---------------------------------------------------------------------------

PauliNoiseSpec::PauliNoiseSpec(const Table& f) : f_(f) { check_distribution(f_, "PauliNoiseSpec"); }

PauliNoiseSpec PauliNoiseSpec::noiseless() {
  Table f{};
  f[0][0] = 1;
  return PauliNoiseSpec(f);
}

PauliNoiseSpec PauliNoiseSpec::normalized(Table f) {
  double total = 0;
  for (const auto& row : f)
    for (double x : row) {
      if (!(x >= 0)) throw QuantumError("PauliNoiseSpec: negative weight");
      total += x;
    }
  if (!(total > 0)) throw QuantumError("PauliNoiseSpec: weights sum to zero");
  for (auto& row : f)
    for (double& x : row) x /= total;
  return PauliNoiseSpec(f);
}

PauliNoiseSpec PauliNoiseSpec::factorized(const std::array<double, 4>& single) {
  Table f{};
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) f[mu][nu] = single[mu] * single[nu];
  return PauliNoiseSpec(f);
}

PauliNoiseSpec PauliNoiseSpec::uniform() {
  Table f{};
  for (auto& row : f) row.fill(1.0 / 16);
  return PauliNoiseSpec(f);
}

BinaryNoiseSpec::BinaryNoiseSpec(const Table& f) : f_(f) { check_distribution(f_, "BinaryNoiseSpec"); }

BinaryNoiseSpec BinaryNoiseSpec::factorized(double f0) {
  check_reliability(f0, "f0");
  const double f1 = 1 - f0;
  return BinaryNoiseSpec(Table{{{f0 * f0, f0 * f1}, {f1 * f0, f1 * f1}}});
}

PauliNoiseSpec BinaryNoiseSpec::to_pauli() const {
  PauliNoiseSpec::Table t{};
  for (int mu = 0; mu < 2; ++mu)
    for (int nu = 0; nu < 2; ++nu) t[mu][nu] = f_[mu][nu];
  return PauliNoiseSpec(t);
}

std::optional<double> BinaryNoiseSpec::factorized_f0(double tol) const {
  const double f0 = f_[0][0] + f_[0][1];
  if (std::abs(f_[0][0] + f_[1][0] - f0) > tol) return std::nullopt;
  const double f1 = 1 - f0;
  if (std::abs(f_[0][0] - f0 * f0) > tol || std::abs(f_[0][1] - f0 * f1) > tol ||
      std::abs(f_[1][1] - f1 * f1) > tol)
    return std::nullopt;
  return f0;
}

void ApparatusNoise::validate() const {
  check_reliability(p1, "p1");
  check_reliability(p2, "p2");
  check_eta(eta);
}

// ---------------------------------------------------------------------------

namespace detail {

Matrix depolarize(const Matrix& m, int n_qubits, double p, std::span<const int> subsystem) {
  check_reliability(p, "reliability p");
  if (subsystem.empty()) throw QuantumError("depolarize: empty subsystem");
  if (static_cast<int>(subsystem.size()) == n_qubits) {
    const double d = static_cast<double>(m.rows());
    return p * m + (1 - p) * m.trace() / d * Matrix::Identity(m.rows(), m.cols());
  }
  std::vector<int> rest;
  for (int q = 0; q < n_qubits; ++q)
    if (std::find(subsystem.begin(), subsystem.end(), q) == subsystem.end()) rest.push_back(q);
  for (int q : subsystem) check_qubit(q, n_qubits);
  const double d = std::ldexp(1.0, static_cast<int>(subsystem.size()));
  const Matrix reduced = partial_trace(m, n_qubits, rest);
  return p * m + ((1 - p) / d) * identity_tensor(reduced, n_qubits, rest);
}

Matrix correlated_pauli(const Matrix& m, int n_qubits, const PauliNoiseSpec& spec, int a1, int a2) {
  check_qubit(a1, n_qubits);
  check_qubit(a2, n_qubits);
  if (a1 == a2) throw QuantumError("correlated_pauli: qubits must be distinct");
  Matrix acc = Matrix::Zero(m.rows(), m.cols());
  for (int mu = 0; mu < 4; ++mu) {
    for (int nu = 0; nu < 4; ++nu) {
      const double w = spec(mu, nu);
      if (w == 0) continue;
      Matrix t = m;
      const std::array<PauliTerm, 2> terms{PauliTerm{a1, mu}, PauliTerm{a2, nu}};
      conjugate_pauli(t, n_qubits, terms);
      acc += w * t;
    }
  }
  return acc;
}

Matrix povm_branch(const Matrix& m, int qubit, int n_qubits, double eta, int reported) {
  check_eta(eta);
  if (reported != 0 && reported != 1) throw QuantumError("POVM outcome must be 0 or 1");
  Matrix2 k = Matrix2::Zero();
  k(reported, reported) = std::sqrt(eta);
  k(1 - reported, 1 - reported) = std::sqrt(1 - eta);
  Matrix out = m;
  left_apply_1q(out, qubit, n_qubits, k);
  out.adjointInPlace();
  left_apply_1q(out, qubit, n_qubits, k);
  out.adjointInPlace();
  return out;
}

}  // namespace detail

DensityOperator depolarize(const DensityOperator& rho, double p, std::span<const int> subsystem) {
  return DensityOperator(rho.n_qubits(), detail::depolarize(rho.matrix(), rho.n_qubits(), p, subsystem));
}

DensityOperator depolarize_after(const DensityOperator& rho, const Gate& g, double p,
                                 std::span<const int> subsystem) {
  for (int q : gate_qubits(g))
    if (std::find(subsystem.begin(), subsystem.end(), q) == subsystem.end())
      throw QuantumError("depolarize_after: gate acts outside the depolarized subsystem");
  return depolarize(apply_unitary(rho, g), p, subsystem);
}

double povm_probability(const DensityOperator& rho, int qubit, double eta, int reported) {
  check_eta(eta);
  const double p_true = z_probability(rho, qubit, reported);
  return eta * p_true + (1 - eta) * (1 - p_true);
}

Measurement<DensityOperator> povm_measure(const DensityOperator& rho, int qubit, double eta, Rng& rng) {
  const double p0 = povm_probability(rho, qubit, eta, 0);
  const int reported = uniform01(rng) < p0 ? 0 : 1;
  return {reported, DensityOperator::normalized(
                        rho.n_qubits(), detail::povm_branch(rho.matrix(), qubit, rho.n_qubits(), eta, reported))};
}

DensityOperator correlated_pauli(const DensityOperator& rho, const PauliNoiseSpec& spec, int a1, int a2) {
  return DensityOperator(rho.n_qubits(), detail::correlated_pauli(rho.matrix(), rho.n_qubits(), spec, a1, a2));
}

DensityOperator correlated_flip(const DensityOperator& rho, const BinaryNoiseSpec& spec, int a1, int a2) {
  return correlated_pauli(rho, spec.to_pauli(), a1, a2);
}

DensityOperator pauli_channel(const DensityOperator& rho, const std::array<double, 4>& w, int qubit) {
  detail::check_qubit(qubit, rho.n_qubits());
  double total = 0;
  for (double x : w) {
    if (!(x >= 0)) throw QuantumError("pauli_channel: negative weight");
    total += x;
  }
  if (std::abs(total - 1) > kNormTolerance) throw QuantumError("pauli_channel: weights must sum to 1");
  Matrix acc = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (int mu = 0; mu < 4; ++mu) {
    if (w[mu] == 0) continue;
    Matrix t = rho.matrix();
    const std::array<PauliTerm, 1> term{PauliTerm{qubit, mu}};
    detail::conjugate_pauli(t, rho.n_qubits(), term);
    acc += w[mu] * t;
  }
  return DensityOperator(rho.n_qubits(), std::move(acc));
}

std::pair<int, int> sample_pauli_pair(const PauliNoiseSpec& spec, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0;
  std::pair<int, int> last{0, 0};
  for (int mu = 0; mu < 4; ++mu) {
    for (int nu = 0; nu < 4; ++nu) {
      const double w = spec(mu, nu);
      if (w == 0) continue;
      cumulative += w;
      last = {mu, nu};
      if (u < cumulative) return last;
    }
  }
  return last;  // rounding slack at the top of the CDF
}

std::pair<int, int> sample_pauli_pair(const BinaryNoiseSpec& spec, Rng& rng) {
  const double u = uniform01(rng);
  const auto& f = spec.table();
  double cumulative = 0;
  std::pair<int, int> last{0, 0};
  for (int mu = 0; mu < 2; ++mu) {
    for (int nu = 0; nu < 2; ++nu) {
      if (f[mu][nu] == 0) continue;
      cumulative += f[mu][nu];
      last = {mu, nu};
      if (u < cumulative) return last;
    }
  }
  return last;
}

}  // namespace qcomm
