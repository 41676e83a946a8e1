#pragma once

// Action of the purification step on Bell labels. Every element of the step
// maps Bell products to Bell products, so a pair can be tracked as a
// BellIndex. The constexpr rules below are what the Monte Carlo uses;
// derived_tables() recomputes the same tables from dense simulation.

#include <array>

#include "qcomm/qcore.hpp"

namespace qcomm::bell {

/// Alice exp(-i pi/4 sigma_x), Bob exp(+i pi/4 sigma_x): swaps Phi- and Psi-.
constexpr BellIndex rotate(BellIndex b) {
  return BellIndex::from_bits(b.phase_bit(), b.parity_bit() ^ b.phase_bit());
}

/// sigma_mu on Alice's half (mu = 0..3).
constexpr BellIndex alice_pauli(BellIndex b, int mu) {
  constexpr int kMask[4] = {0, 1, 3, 2};
  return BellIndex(b.value() ^ kMask[mu & 3]);
}

struct CnotImage {
  BellIndex source;
  BellIndex target;
  constexpr bool operator==(const CnotImage&) const = default;
};

/// Bilateral CNOT, source pair controls, target pair is the target.
constexpr CnotImage bilateral_cnot(BellIndex source, BellIndex target) {
  return {BellIndex::from_bits(source.phase_bit() ^ target.phase_bit(), source.parity_bit()),
          BellIndex::from_bits(target.phase_bit(), source.parity_bit() ^ target.parity_bit())};
}

/// The two z outcomes on a Bell pair agree exactly when its parity bit is 0.
constexpr bool coincide(BellIndex target) { return target.parity_bit() == 0; }

struct StepImage {
  BellIndex source;  // label of the kept pair
  BellIndex target;  // label of the measured pair before measurement
  bool kept;
};

/// Rotation, Alice-side noise sigma_mu (source) and sigma_nu (target),
/// bilateral CNOT and the coincidence test.
constexpr StepImage protocol_step(BellIndex source, BellIndex target, int mu, int nu) {
  const CnotImage c = bilateral_cnot(alice_pauli(rotate(source), mu), alice_pauli(rotate(target), nu));
  return {c.source, c.target, coincide(c.target)};
}

struct Tables {
  std::array<BellIndex, 4> rotation{};
  std::array<std::array<BellIndex, 4>, 4> pauli{};        // [bell][mu]
  std::array<std::array<CnotImage, 4>, 4> cnot{};         // [source][target]
  std::array<bool, 4> coincidence{};
  bool operator==(const Tables&) const = default;
};

/// Tables built from the constexpr rules above.
Tables frozen_tables();
/// Tables obtained once from dense statevector simulation (qcore), cached.
const Tables& derived_tables();

}  // namespace qcomm::bell
