#pragma once

// BB84 and E91 key distribution on simulated qubits, plus the one-time pad.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qcomm/qcore.hpp"
#include "qcomm/random.hpp"

namespace qcomm::qkd {

using BitString = std::vector<std::uint8_t>;

BitString parse_bits(std::string_view s);
std::string to_string(const BitString& b);

/// c_i = t_i xor s_i. Throws std::invalid_argument on a length mismatch.
BitString otp_encrypt(const BitString& text, const BitString& key);
inline BitString otp_decrypt(const BitString& cipher, const BitString& key) { return otp_encrypt(cipher, key); }

/// One-qubit channel between Alice and Bob.
using Channel = std::function<DensityOperator(const DensityOperator&)>;
Channel identity_channel();
/// rho -> p rho + (1 - p) 1/2.
Channel depolarizing_channel(double p);

struct Eve {
  /// Probability that a given photon is measured in a random BB84 basis and
  /// resent in the observed eigenstate. Zero means no eavesdropper.
  double intercept_fraction = 0;
};

struct BB84Options {
  std::size_t n = 100000;
  Channel channel = identity_channel();  // applied after Eve
  Eve eve;
  double sacrifice_fraction = 0.1;  // sifted bits revealed for the error check
};

struct BB84Session {
  std::size_t n = 0;
  BitString alice_key, alice_basis, bob_basis, bob_result;  // basis 0 = z, 1 = x
  BitString sift_mask;
  BitString sifted_key_alice, sifted_key_bob;
  std::vector<std::size_t> check_positions;  // indices into the sifted keys
  std::size_t check_errors = 0;
  double qber_estimate = 0;  // on the revealed sample
  double qber_sifted = 0;    // on all sifted bits (diagnostic only)
  BitString final_key_alice, final_key_bob;  // sifted minus revealed

  double sift_fraction() const;
};

/// Prepares |0>, |1>, |+>, |-> from Alice's key and basis bits, sends each
/// through Eve and the channel, and measures in Bob's random basis. Throws
/// std::invalid_argument for n = 0 or fractions outside [0, 1].
BB84Session bb84_run(const BB84Options& options, Rng& rng);

/// Measurement directions in the x-z plane, angles in degrees from the z
/// axis. Defaults: Alice 0, 45, 90; Bob 45, 90, 135.
struct E91Angles {
  std::array<double, 3> alice{0, 45, 90};
  std::array<double, 3> bob{45, 90, 135};
};

struct E91Options {
  std::size_t n = 100000;
  std::optional<DensityOperator> source;  // default: singlet Psi-
  E91Angles angles;
};

struct E91Session {
  std::size_t n = 0;
  std::vector<std::uint8_t> alice_dir, bob_dir;  // 1..3
  std::vector<std::int8_t> alice_out, bob_out;   // +1 / -1
  BitString matched_mask;  // (a2, b1) or (a3, b2)
  BitString key_alice;     // 1 for outcome -1
  BitString key_bob_raw;   // same rule on Bob's side: complementary to Alice
  BitString key_bob;       // key_bob_raw flipped
  double chsh = 0;
  double chsh_sigma = 0;
  double anticorrelation = 0;  // fraction of matched rounds with opposite outcomes

  double sift_fraction() const;
  double qber() const;  // disagreement of key_alice and key_bob
};

/// Throws std::invalid_argument for n = 0 or a source that is not two qubits.
/// The CHSH fields stay at 0 when a setting pair was never drawn.
E91Session e91_run(const E91Options& options, Rng& rng);

/// E(a1,b1) - E(a1,b3) + E(a3,b1) + E(a3,b3) from the session's outcomes.
/// Throws NumericError naming any setting pair without samples.
double chsh_value(const E91Session& s);
/// One-sigma sampling error of chsh_value.
double chsh_standard_error(const E91Session& s);

/// Exact <sigma_a (x) sigma_b> for measurement angles (degrees) on a two-qubit state.
double correlator(const DensityOperator& rho, double alice_deg, double bob_deg);

}  // namespace qcomm::qkd
