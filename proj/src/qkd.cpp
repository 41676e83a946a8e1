#include "qcomm/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qcomm/channels.hpp"

namespace qcomm::qkd {

namespace {

double radians(double deg) { return deg * std::numbers::pi / 180; }

// Probability that a z (basis 0) or x (basis 1) measurement of rho reads 0.
double prob_zero(const Matrix2& rho, int basis) {
  if (basis == 0) return rho(0, 0).real();
  return 0.5 * (rho(0, 0) + rho(0, 1) + rho(1, 0) + rho(1, 1)).real();
}

Matrix2 prepared(int bit, int basis) {
  Matrix2 m = Matrix2::Zero();
  if (basis == 0) {
    m(bit, bit) = 1;
  } else {
    const double s = bit == 0 ? 0.5 : -0.5;
    m << 0.5, s, s, 0.5;
  }
  return m;
}

void check_fraction(double x, const char* what) {
  if (!(x >= 0 && x <= 1)) throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
}

// Joint outcome probabilities [a][b] (index 0 = +1) for measurements along
// the given x-z directions.
std::array<std::array<double, 2>, 2> joint(const DensityOperator& rho, double alice_deg, double bob_deg) {
  const std::array<Gate, 2> rot{gate::RotY{0, -radians(alice_deg)}, gate::RotY{1, -radians(bob_deg)}};
  const DensityOperator r = apply_circuit(rho, rot);
  std::array<std::array<double, 2>, 2> p{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) p[a][b] = std::max(0.0, r(2 * a + b, 2 * a + b).real());
  return p;
}

struct Cell {
  double sum = 0;
  std::size_t count = 0;
};

std::array<Cell, 4> chsh_cells(const E91Session& s) {
  // (a1,b1), (a1,b3), (a3,b1), (a3,b3)
  std::array<Cell, 4> cells{};
  for (std::size_t i = 0; i < s.n; ++i) {
    const int a = s.alice_dir[i], b = s.bob_dir[i];
    if ((a != 1 && a != 3) || (b != 1 && b != 3)) continue;
    Cell& c = cells[(a == 3 ? 2 : 0) + (b == 3 ? 1 : 0)];
    c.sum += s.alice_out[i] * s.bob_out[i];
    ++c.count;
  }
  return cells;
}

constexpr std::array<const char*, 4> kCellNames{"(a1,b1)", "(a1,b3)", "(a3,b1)", "(a3,b3)"};
constexpr std::array<double, 4> kCellSigns{1, -1, 1, 1};

}  // namespace

BitString parse_bits(std::string_view s) {
  BitString b;
  b.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw std::invalid_argument("bit strings contain only 0 and 1");
    b.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return b;
}

std::string to_string(const BitString& b) {
  std::string s;
  s.reserve(b.size());
  for (auto x : b) s.push_back(x ? '1' : '0');
  return s;
}

BitString otp_encrypt(const BitString& text, const BitString& key) {
  if (text.size() != key.size()) throw std::invalid_argument("one-time pad needs a key as long as the text");
  BitString c(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) c[i] = static_cast<std::uint8_t>((text[i] ^ key[i]) & 1);
  return c;
}

Channel identity_channel() {
  return [](const DensityOperator& rho) { return rho; };
}

Channel depolarizing_channel(double p) {
  check_fraction(p, "depolarizing parameter");
  return [p](const DensityOperator& rho) {
    const std::array<int, 1> all{0};
    return depolarize(rho, p, all);
  };
}

double BB84Session::sift_fraction() const { return n == 0 ? 0 : static_cast<double>(sifted_key_alice.size()) / n; }

BB84Session bb84_run(const BB84Options& o, Rng& rng) {
  if (o.n == 0) throw std::invalid_argument("BB84 needs at least one round");
  check_fraction(o.eve.intercept_fraction, "intercept fraction");
  check_fraction(o.sacrifice_fraction, "sacrifice fraction");

  BB84Session s;
  s.n = o.n;
  s.alice_key.resize(o.n);
  s.alice_basis.resize(o.n);
  s.bob_basis.resize(o.n);
  s.bob_result.resize(o.n);
  s.sift_mask.resize(o.n);
  for (std::size_t i = 0; i < o.n; ++i) {
    const int k = random_bit(rng), b = random_bit(rng);
    Matrix2 rho = prepared(k, b);
    if (o.eve.intercept_fraction > 0 && uniform01(rng) < o.eve.intercept_fraction) {
      const int eb = random_bit(rng);
      const int e = uniform01(rng) < prob_zero(rho, eb) ? 0 : 1;
      rho = prepared(e, eb);
    }
    rho = o.channel(DensityOperator(1, rho)).matrix();
    const int bb = random_bit(rng);
    const int r = uniform01(rng) < prob_zero(rho, bb) ? 0 : 1;
    s.alice_key[i] = static_cast<std::uint8_t>(k);
    s.alice_basis[i] = static_cast<std::uint8_t>(b);
    s.bob_basis[i] = static_cast<std::uint8_t>(bb);
    s.bob_result[i] = static_cast<std::uint8_t>(r);
    s.sift_mask[i] = b == bb;
    if (b == bb) {
      s.sifted_key_alice.push_back(s.alice_key[i]);
      s.sifted_key_bob.push_back(s.bob_result[i]);
    }
  }

  const std::size_t m = s.sifted_key_alice.size();
  std::size_t errors = 0;
  for (std::size_t i = 0; i < m; ++i) errors += s.sifted_key_alice[i] != s.sifted_key_bob[i];
  s.qber_sifted = m == 0 ? 0 : static_cast<double>(errors) / m;

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  shuffle(order.begin(), order.end(), rng);
  std::size_t k = static_cast<std::size_t>(std::ceil(o.sacrifice_fraction * m));
  k = std::min(k, m);
  s.check_positions.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(s.check_positions.begin(), s.check_positions.end());
  for (auto i : s.check_positions) s.check_errors += s.sifted_key_alice[i] != s.sifted_key_bob[i];
  s.qber_estimate = k == 0 ? 0 : static_cast<double>(s.check_errors) / k;

  std::vector<std::uint8_t> revealed(m, 0);
  for (auto i : s.check_positions) revealed[i] = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (revealed[i]) continue;
    s.final_key_alice.push_back(s.sifted_key_alice[i]);
    s.final_key_bob.push_back(s.sifted_key_bob[i]);
  }
  return s;
}

double correlator(const DensityOperator& rho, double alice_deg, double bob_deg) {
  if (rho.n_qubits() != 2) throw QuantumError("correlator needs a two-qubit state");
  const auto p = joint(rho, alice_deg, bob_deg);
  return p[0][0] + p[1][1] - p[0][1] - p[1][0];
}

double E91Session::sift_fraction() const { return n == 0 ? 0 : static_cast<double>(key_alice.size()) / n; }

double E91Session::qber() const {
  if (key_alice.empty()) return 0;
  std::size_t e = 0;
  for (std::size_t i = 0; i < key_alice.size(); ++i) e += key_alice[i] != key_bob[i];
  return static_cast<double>(e) / key_alice.size();
}

E91Session e91_run(const E91Options& o, Rng& rng) {
  if (o.n == 0) throw std::invalid_argument("E91 needs at least one round");
  const DensityOperator rho = o.source ? *o.source : DensityOperator(bell_state(kPsiMinus));
  if (rho.n_qubits() != 2) throw std::invalid_argument("E91 source must be a two-qubit state");

  // Cumulative outcome tables per setting pair: ++, +-, -+, --.
  std::array<std::array<std::array<double, 4>, 3>, 3> cdf{};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const auto p = joint(rho, o.angles.alice[a], o.angles.bob[b]);
      double acc = 0;
      for (int k = 0; k < 4; ++k) {
        acc += p[k >> 1][k & 1];
        cdf[a][b][k] = acc;
      }
      for (auto& x : cdf[a][b]) x /= acc;
    }
  }

  E91Session s;
  s.n = o.n;
  s.alice_dir.resize(o.n);
  s.bob_dir.resize(o.n);
  s.alice_out.resize(o.n);
  s.bob_out.resize(o.n);
  s.matched_mask.resize(o.n);
  std::size_t opposite = 0;
  for (std::size_t i = 0; i < o.n; ++i) {
    const int a = static_cast<int>(uniform_index(rng, 3));
    const int b = static_cast<int>(uniform_index(rng, 3));
    const double u = uniform01(rng);
    int k = 0;
    while (k < 3 && u >= cdf[a][b][k]) ++k;
    const int oa = (k >> 1) ? -1 : 1, ob = (k & 1) ? -1 : 1;
    s.alice_dir[i] = static_cast<std::uint8_t>(a + 1);
    s.bob_dir[i] = static_cast<std::uint8_t>(b + 1);
    s.alice_out[i] = static_cast<std::int8_t>(oa);
    s.bob_out[i] = static_cast<std::int8_t>(ob);
    const bool matched = (a == 1 && b == 0) || (a == 2 && b == 1);
    s.matched_mask[i] = matched;
    if (matched) {
      s.key_alice.push_back(oa < 0);
      s.key_bob_raw.push_back(ob < 0);
      s.key_bob.push_back(ob > 0);
      opposite += oa != ob;
    }
  }
  s.anticorrelation = s.key_alice.empty() ? 0 : static_cast<double>(opposite) / s.key_alice.size();
  const auto cells = chsh_cells(s);
  if (std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.count > 0; })) {
    s.chsh = chsh_value(s);
    s.chsh_sigma = chsh_standard_error(s);
  }
  return s;
}

double chsh_value(const E91Session& s) {
  const auto cells = chsh_cells(s);
  std::string missing;
  double S = 0;
  for (int k = 0; k < 4; ++k) {
    if (cells[k].count == 0) {
      missing += missing.empty() ? "" : ", ";
      missing += kCellNames[k];
      continue;
    }
    S += kCellSigns[k] * cells[k].sum / static_cast<double>(cells[k].count);
  }
  if (!missing.empty()) throw NumericError("CHSH setting pairs without samples: " + missing);
  return S;
}

double chsh_standard_error(const E91Session& s) {
  const auto cells = chsh_cells(s);
  double var = 0;
  for (int k = 0; k < 4; ++k) {
    if (cells[k].count == 0) throw NumericError(std::string("CHSH setting pair without samples: ") + kCellNames[k]);
    const double e = cells[k].sum / static_cast<double>(cells[k].count);
    var += (1 - e * e) / static_cast<double>(cells[k].count);
  }
  return std::sqrt(var);
}

}  // namespace qcomm::qkd
