#include "qcomm/bell_tables.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace qcomm::bell {

namespace {

constexpr double kMatch = 1e-12;

BellIndex identify(const StateVector& psi) {
  for (int k = 0; k < 4; ++k)
    if (std::abs(fidelity(psi, bell_state(BellIndex(k))) - 1) < kMatch) return BellIndex(k);
  throw NumericError("state is not a Bell state");
}

CnotImage identify_pair(const StateVector& psi) {
  for (int s = 0; s < 4; ++s) {
    for (int t = 0; t < 4; ++t) {
      const std::array<BellIndex, 2> labels{BellIndex(s), BellIndex(t)};
      if (std::abs(fidelity(psi, bell_product(labels)) - 1) < kMatch) return {BellIndex(s), BellIndex(t)};
    }
  }
  throw NumericError("state is not a product of Bell states");
}

Tables derive() {
  Tables t;
  const double half_pi = std::numbers::pi / 2;
  for (int b = 0; b < 4; ++b) {
    const StateVector pair = bell_state(BellIndex(b));
    const std::vector<Gate> rot{gate::RotX{0, half_pi}, gate::RotX{1, -half_pi}};
    t.rotation[b] = identify(apply_circuit(pair, rot));
    for (int mu = 0; mu < 4; ++mu) t.pauli[b][mu] = identify(apply_unitary(pair, gate::Pauli{PauliString::single(0, mu)}));
    t.coincidence[b] = z_probability(pair, 0, 0) > 0 &&
                       std::abs(z_probability(project_z(pair, 0, 0), 1, 0) - 1) < kMatch;
    for (int c = 0; c < 4; ++c) {
      const std::array<BellIndex, 2> labels{BellIndex(b), BellIndex(c)};
      const std::vector<Gate> cnots{gate::CNOT{0, 2}, gate::CNOT{1, 3}};
      t.cnot[b][c] = identify_pair(apply_circuit(bell_product(labels), cnots));
    }
  }
  return t;
}

}  // namespace

Tables frozen_tables() {
  Tables t;
  for (int b = 0; b < 4; ++b) {
    const BellIndex x(b);
    t.rotation[b] = rotate(x);
    for (int mu = 0; mu < 4; ++mu) t.pauli[b][mu] = alice_pauli(x, mu);
    t.coincidence[b] = coincide(x);
    for (int c = 0; c < 4; ++c) t.cnot[b][c] = bilateral_cnot(x, BellIndex(c));
  }
  return t;
}

const Tables& derived_tables() {
  static const Tables t = derive();
  return t;
}

}  // namespace qcomm::bell
