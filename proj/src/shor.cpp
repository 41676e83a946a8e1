#include "qcomm/shor.hpp"

#include <cmath>
#include <functional>

namespace qcomm::shor {

namespace {

constexpr double kBranchCut = 1e-14;
constexpr double kProductTolerance = 1e-10;

void check_register(const StateVector& s) {
  if (s.n_qubits() < kCodeQubits) throw QuantumError("Shor code needs at least 9 qubits");
}

// (1 + sign M) / 2 applied to v, unnormalized.
Vector project(const Vector& v, int n, const PauliString& m, int outcome) {
  const Vector mv = apply_unitary(StateVector::normalized(n, v), gate::Pauli{m}).amplitudes() * v.norm();
  const double sign = outcome == 0 ? 1.0 : -1.0;
  return 0.5 * (v + sign * mv);
}

}  // namespace

void LogicalQubit::validate() const {
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1) > kStateTolerance)
    throw QuantumError("logical qubit amplitudes are not normalized");
}

StateVector LogicalQubit::state() const {
  validate();
  Vector v(2);
  v << alpha, beta;
  return StateVector(1, v);
}

bool Syndrome::is_zero() const {
  for (auto b : bits)
    if (b) return false;
  return true;
}

std::string Syndrome::str() const {
  std::string out;
  for (auto b : bits) out.push_back(b ? '1' : '0');
  return out;
}

const std::array<PauliString, 8>& stabilizers() {
  static const std::array<PauliString, 8> m{
      PauliString({{0, 3}, {1, 3}}),
      PauliString({{1, 3}, {2, 3}}),
      PauliString({{3, 3}, {4, 3}}),
      PauliString({{4, 3}, {5, 3}}),
      PauliString({{6, 3}, {7, 3}}),
      PauliString({{7, 3}, {8, 3}}),
      PauliString({{0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}}),
      PauliString({{3, 1}, {4, 1}, {5, 1}, {6, 1}, {7, 1}, {8, 1}}),
  };
  return m;
}

std::vector<Gate> encoding_circuit() {
  return {gate::CNOT{0, 3}, gate::CNOT{0, 6}, gate::Hadamard{0}, gate::Hadamard{3}, gate::Hadamard{6},
          gate::CNOT{0, 1}, gate::CNOT{0, 2}, gate::CNOT{3, 4}, gate::CNOT{3, 5}, gate::CNOT{6, 7},
          gate::CNOT{6, 8}};
}

std::vector<Gate> decoding_circuit() {
  auto c = encoding_circuit();
  return {c.rbegin(), c.rend()};
}

StateVector encode(const LogicalQubit& q) {
  const StateVector in = q.state().tensor(StateVector(kCodeQubits - 1));
  return apply_circuit(in, encoding_circuit());
}

StateVector codeword(int bit) {
  if (bit != 0 && bit != 1) throw QuantumError("codeword bit must be 0 or 1");
  return encode(bit == 0 ? LogicalQubit{1, 0} : LogicalQubit{0, 1});
}

StateVector inject(const StateVector& state, int qubit, int mu) {
  check_register(state);
  if (qubit < 0 || qubit >= kCodeQubits) throw QuantumError("error qubit outside the code block");
  if (mu == 0) return state;
  return apply_unitary(state, gate::Pauli{PauliString::single(qubit, mu)});
}

std::array<double, 8> stabilizer_expectations(const StateVector& state) {
  check_register(state);
  std::array<double, 8> e{};
  for (int i = 0; i < 8; ++i) {
    const StateVector m = apply_unitary(state, gate::Pauli{stabilizers()[i]});
    e[i] = state.amplitudes().dot(m.amplitudes()).real();
  }
  return e;
}

SyndromeBranch measure_syndrome(const StateVector& state, Rng& rng) {
  check_register(state);
  const int n = state.n_qubits();
  SyndromeBranch out;
  out.probability = 1;
  Vector v = state.amplitudes();
  for (int i = 0; i < 8; ++i) {
    Vector plus = project(v, n, stabilizers()[i], 0);
    const double p_plus = plus.squaredNorm() / v.squaredNorm();
    const int outcome = uniform01(rng) < p_plus ? 0 : 1;
    out.syndrome.bits[i] = static_cast<std::uint8_t>(outcome);
    out.probability *= outcome == 0 ? p_plus : 1 - p_plus;
    v = outcome == 0 ? std::move(plus) : project(v, n, stabilizers()[i], 1);
    v /= v.norm();
  }
  out.state = StateVector::normalized(n, v);
  return out;
}

std::vector<SyndromeBranch> syndrome_distribution(const StateVector& state) {
  check_register(state);
  const int n = state.n_qubits();
  std::vector<SyndromeBranch> out;
  Syndrome s;
  std::function<void(int, const Vector&)> walk = [&](int i, const Vector& v) {
    const double p = v.squaredNorm();
    if (p <= kBranchCut) return;
    if (i == 8) {
      out.push_back({s, p, StateVector::normalized(n, v)});
      return;
    }
    for (int outcome = 0; outcome < 2; ++outcome) {
      s.bits[i] = static_cast<std::uint8_t>(outcome);
      walk(i + 1, project(v, n, stabilizers()[i], outcome));
    }
    s.bits[i] = 0;
  };
  walk(0, state.amplitudes());
  return out;
}

const std::map<Syndrome, Correction>& correction_table() {
  static const std::map<Syndrome, Correction> table = [] {
    std::map<Syndrome, Correction> t;
    t.emplace(Syndrome{}, Correction{});
    const StateVector zero = codeword(0);
    for (int j = 0; j < kCodeQubits; ++j) {
      for (int mu = 1; mu <= 3; ++mu) {
        const auto e = stabilizer_expectations(inject(zero, j, mu));
        Syndrome s;
        for (int i = 0; i < 8; ++i) {
          if (std::abs(std::abs(e[i]) - 1) > kProductTolerance)
            throw NumericError("single-qubit error does not give a definite syndrome");
          s.bits[i] = e[i] < 0 ? 1 : 0;
        }
        t.emplace(s, Correction{j, mu});
      }
    }
    return t;
  }();
  return table;
}

StateVector correct(const StateVector& state, const Syndrome& s) {
  const auto& t = correction_table();
  const auto it = t.find(s);
  if (it == t.end()) throw UncorrectableError("syndrome " + s.str() + " matches no single-qubit error");
  if (it->second.qubit < 0) return state;
  return inject(state, it->second.qubit, it->second.mu);
}

Decoded decode(const StateVector& state) {
  if (state.n_qubits() != kCodeQubits) throw QuantumError("decode expects exactly 9 qubits");
  Decoded d;
  const auto e = stabilizer_expectations(state);
  for (int i = 0; i < 8; ++i) d.syndrome.bits[i] = e[i] < 0 ? 1 : 0;

  const StateVector out = apply_circuit(state, decoding_circuit());
  constexpr std::uint64_t kRest = 1u << (kCodeQubits - 1);
  std::uint64_t best = 0;
  double best_weight = -1;
  for (std::uint64_t r = 0; r < kRest; ++r) {
    const double w = out.probability(r) + out.probability(kRest + r);
    if (w > best_weight) {
      best_weight = w;
      best = r;
    }
  }
  if (best_weight < 1 - kProductTolerance)
    throw UncorrectableError("decoded register is entangled with the logical qubit");
  Vector v(2);
  v << out[best], out[kRest + best];
  d.logical = StateVector::normalized(1, v);
  for (int k = 0; k < 8; ++k) d.register_bits[k] = static_cast<std::uint8_t>((best >> (7 - k)) & 1);
  return d;
}

std::vector<RoundTrip> roundtrip_all(const LogicalQubit& q, Rng& rng) {
  const StateVector encoded = encode(q);
  const StateVector target = q.state();
  std::vector<RoundTrip> out;
  std::vector<Correction> errors{{-1, 0}};
  for (int j = 0; j < kCodeQubits; ++j)
    for (int mu = 1; mu <= 3; ++mu) errors.push_back({j, mu});
  for (const auto& err : errors) {
    const StateVector hit = err.qubit < 0 ? encoded : inject(encoded, err.qubit, err.mu);
    const SyndromeBranch m = measure_syndrome(hit, rng);
    const Decoded d = decode(correct(m.state, m.syndrome));
    out.push_back({err, m.syndrome, fidelity(d.logical, target)});
  }
  return out;
}

std::vector<DigitalizationBranch> digitalization_demo(const LogicalQubit& q, int code_qubit, double theta) {
  if (code_qubit < 0 || code_qubit >= kCodeQubits) throw QuantumError("code qubit outside the block");
  Vector plus(2);
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  StateVector joint = encode(q).tensor(StateVector(1, plus));
  joint = apply_unitary(joint, gate::ControlledRotX{kCodeQubits, code_qubit, theta});
  std::vector<DigitalizationBranch> out;
  const std::array<int, 9> keep{0, 1, 2, 3, 4, 5, 6, 7, 8};
  for (const auto& b : syndrome_distribution(joint))
    out.push_back({b.syndrome, b.probability, partial_trace(b.state, keep).purity()});
  return out;
}

}  // namespace qcomm::shor
