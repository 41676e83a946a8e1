#include "qcomm/demon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

namespace qcomm {

namespace {

double require_factorized(const BinaryNoiseSpec& f) {
  const auto f0 = f.factorized_f0(1e-12);
  if (!f0) throw std::invalid_argument("binary noise is not of the factorized form f_mu f_nu");
  return *f0;
}

struct BinaryTerms {
  std::array<double, 4> u;
  double N;
};

BinaryTerms binary_terms(const FlaggedBinaryState& s, const BinaryNoiseSpec& f) {
  const double f00 = f.f00(), f11 = f.f11(), fs = f.fs();
  const double A0 = s.A0, A1 = s.A1, B0 = s.B0, B1 = s.B1;
  BinaryTerms t;
  t.u[0] = f00 * (A0 * A0 + 2 * A0 * A1) + f11 * (B1 * B1 + 2 * B0 * B1) + fs * (A0 * B1 + A1 * B1 + A0 * B0);
  t.u[1] = f00 * A1 * A1 + f11 * B0 * B0 + fs * A1 * B0;
  t.u[2] = f00 * (B0 * B0 + 2 * B0 * B1) + f11 * (A1 * A1 + 2 * A0 * A1) + fs * (B0 * A1 + B1 * A1 + B0 * A0);
  t.u[3] = f00 * B1 * B1 + f11 * A0 * A0 + fs * B1 * A0;
  const double A = A0 + A1, B = B0 + B1;
  t.N = (f00 + f11) * (A * A + B * B) + 2 * fs * A * B;
  return t;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

FlaggedBinaryState FlaggedBinaryState::unflagged(double F) {
  if (!(F >= 0 && F <= 1)) throw QuantumError("binary fidelity must lie in [0, 1]");
  return {F, 0, 1 - F, 0};
}

void FlaggedBinaryState::validate(double tol) const {
  if (!(A0 >= 0 && A1 >= 0 && B0 >= 0 && B1 >= 0)) throw QuantumError("flagged coefficients must be nonnegative");
  if (std::abs(sum() - 1) > tol) throw QuantumError("flagged coefficients must sum to 1");
}

BinaryStepResult binary_step(const FlaggedBinaryState& s, const BinaryNoiseSpec& f) {
  s.validate();
  const BinaryTerms t = binary_terms(s, f);
  if (!(t.N > 0)) throw NumericError("binary_step: vanishing success probability");
  const double total = t.u[0] + t.u[1] + t.u[2] + t.u[3];  // equals N up to rounding; keeps the sum at 1
  return {{t.u[0] / total, t.u[1] / total, t.u[2] / total, t.u[3] / total}, t.N};
}

Eigen::Matrix4d binary_jacobian(const FlaggedBinaryState& s, const BinaryNoiseSpec& f) {
  const double f00 = f.f00(), f11 = f.f11(), fs = f.fs();
  const double A0 = s.A0, A1 = s.A1, B0 = s.B0, B1 = s.B1;
  Eigen::Matrix4d du;
  du << 2 * f00 * (A0 + A1) + fs * (B0 + B1), 2 * f00 * A0 + fs * B1, 2 * f11 * B1 + fs * A0,
      2 * f11 * (B0 + B1) + fs * (A0 + A1),
      0, 2 * f00 * A1 + fs * B0, 2 * f11 * B0 + fs * A1, 0,
      2 * f11 * A1 + fs * B0, 2 * f11 * (A0 + A1) + fs * (B0 + B1), 2 * f00 * (B0 + B1) + fs * (A0 + A1),
      2 * f00 * B0 + fs * A1,
      2 * f11 * A0 + fs * B1, 0, 0, 2 * f00 * B1 + fs * A0;
  const double A = A0 + A1, B = B0 + B1;
  const double dA = 2 * (f00 + f11) * A + 2 * fs * B;
  const double dB = 2 * (f00 + f11) * B + 2 * fs * A;
  const Eigen::RowVector4d dN(dA, dA, dB, dB);
  const BinaryTerms t = binary_terms(s, f);
  const Eigen::Vector4d u(t.u[0], t.u[1], t.u[2], t.u[3]);
  return (du - (u / t.N) * dN) / t.N;
}

double spectral_radius(const Eigen::Matrix4d& m) {
  const Eigen::EigenSolver<Eigen::Matrix4d> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double conditional_fidelity(const FlaggedBinaryState& s) { return s.conditional_fidelity(); }

BinaryIteration iterate_binary(const FlaggedBinaryState& start, const BinaryNoiseSpec& f, int cap, double tol) {
  BinaryIteration it;
  it.state = start;
  for (it.iterations = 0; it.iterations < cap;) {
    const FlaggedBinaryState next = binary_step(it.state, f).state;
    ++it.iterations;
    const auto a = it.state.as_array(), b = next.as_array();
    double change = 0;
    for (int k = 0; k < 4; ++k) change = std::max(change, std::abs(a[k] - b[k]));
    it.state = next;
    if (change < tol) {
      it.converged = true;
      break;
    }
  }
  return it;
}

FlaggedBinaryState binary_fixpoint(const BinaryNoiseSpec& f) {
  const double f0 = require_factorized(f);
  if (f0 < 0.75) throw std::invalid_argument("nontrivial binary fixpoint requires f0 >= 3/4");
  const BinaryIteration it = iterate_binary({1, 0, 0, 0}, f, 100000, 1e-15);
  if (it.state.A1 != 0 || it.state.B0 != 0) throw NumericError("binary_fixpoint: left the invariant line");

  // On the invariant line (a, 0, 0, 1 - a) the fixpoint condition a N(a) = u0(a)
  // is a cubic with the symmetric root a = 1/2; dividing it out leaves
  // a^2 - a + f11 / (f00 + f11 - fs) = 0.
  const double k = f.f00() + f.f11() - f.fs();
  if (!(k > 0)) throw NumericError("binary_fixpoint: degenerate line map (f0=" + fmt(f0) + ")");
  double disc = 0.25 - f.f11() / k;
  if (disc < 0 && disc > -1e-15) disc = 0;
  if (disc < 0) throw NumericError("binary_fixpoint: no nontrivial fixpoint (f0=" + fmt(f0) + ")");
  const double a = std::min(0.5 + std::sqrt(disc), 1.0);
  // The iterate approaches the branch from above; once it has settled it must agree.
  if (it.converged ? std::abs(it.state.A0 - a) > 1e-10 : it.state.A0 < a - 1e-10)
    throw NumericError("binary_fixpoint: iteration settled at A0=" + fmt(it.state.A0) + ", line root " + fmt(a));
  return {a, 0, 0, 1 - a};
}

FlaggedBinaryState binary_fixpoint(double f0) { return binary_fixpoint(BinaryNoiseSpec::factorized(f0)); }

double fixpoint_A0_closed_form(double f0) { return 0.5 + std::sqrt(f0 - 0.75) / (2 * f0 - 1); }

double fixpoint_A0_printed_form(double f0) { return 0.5 + std::sqrt(f0 - 0.75) / (f0 - 1); }

double critical_f0_search(double lo, double hi, double tolerance) {
  auto excess = [](double f0) { return spectral_radius(binary_jacobian(binary_fixpoint(f0), BinaryNoiseSpec::factorized(f0))) - 1; };
  const double g_lo = excess(lo), g_hi = excess(hi);
  if (!(g_lo > 0 && g_hi < 0))
    throw NumericError("critical_f0: spectral radius does not cross 1 on [" + fmt(lo) + ", " + fmt(hi) +
                       "] (rho-1 = " + fmt(g_lo) + ", " + fmt(g_hi) + ")");
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double critical_f0() {
  static const double value = critical_f0_search(0.7501, 0.999, 1e-6);
  return value;
}

const char* regime_name(RegimeLabel r) {
  switch (r) {
    case RegimeLabel::no_purification: return "no_purification";
    case RegimeLabel::intermediate: return "intermediate";
    case RegimeLabel::security: return "security";
  }
  return "?";
}

RegimeLabel classify_regime(double f0) {
  if (f0 < 0.75) return RegimeLabel::no_purification;
  if (f0 > critical_f0()) return RegimeLabel::security;
  return RegimeLabel::intermediate;
}

RegimeLabel classify_regime(const BinaryNoiseSpec& f) { return classify_regime(require_factorized(f)); }

std::vector<BinaryRow> binary_trajectory(const FlaggedBinaryState& s0, const BinaryNoiseSpec& f, int rounds) {
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  s0.validate();
  std::vector<BinaryRow> rows{{0, s0, 1}};
  for (int r = 1; r <= rounds; ++r) {
    const BinaryStepResult res = binary_step(rows.back().state, f);
    rows.push_back({r, res.state, res.p_success});
  }
  return rows;
}

void write_binary_csv(std::ostream& out, const std::vector<BinaryRow>& rows) {
  const auto old = out.precision(15);
  out << "round,A0,A1,B0,B1,F,F_cond,p_success\n";
  for (const auto& r : rows) {
    const auto& s = r.state;
    out << r.round << ',' << s.A0 << ',' << s.A1 << ',' << s.B0 << ',' << s.B1 << ',' << s.fidelity() << ','
        << s.conditional_fidelity() << ',' << r.p_success << '\n';
  }
  out.precision(old);
}

std::vector<RegimeRow> regime_map(const std::vector<double>& f0_grid, const RegimeMapOptions& o) {
  for (double f0 : f0_grid)
    if (!(f0 >= 0.5 && f0 <= 1)) throw std::invalid_argument("regime_map: f0 grid must lie in [0.5, 1]");
  o.start.validate();
  std::vector<RegimeRow> rows(f0_grid.size());
  auto work = [&](std::size_t i) {
    const double f0 = f0_grid[i];
    const BinaryIteration it = iterate_binary(o.start, BinaryNoiseSpec::factorized(f0), o.iteration_cap, o.tolerance);
    rows[i] = {f0, classify_regime(f0), it.state, it.converged};
  };
  critical_f0();  // computed before the workers start
  const int workers = std::max(1, std::min<int>(o.workers, static_cast<int>(rows.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) work(i);
    return rows;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < rows.size(); i += static_cast<std::size_t>(workers)) work(i);
    });
  for (auto& t : pool) t.join();
  return rows;
}

void write_regime_csv(std::ostream& out, const std::vector<RegimeRow>& rows) {
  const auto old = out.precision(15);
  out << "f0,regime,A0_inf,B1_inf,F_inf,F_cond_inf,A1_inf,B0_inf,converged\n";
  for (const auto& r : rows) {
    const auto& s = r.state;
    out << r.f0 << ',' << regime_name(r.regime) << ',' << s.A0 << ',' << s.B1 << ',' << s.fidelity() << ','
        << s.conditional_fidelity() << ',' << s.A1 << ',' << s.B0 << ',' << (r.converged ? 1 : 0) << '\n';
  }
  out.precision(old);
}

// ---------------------------------------------------------------------------

FlaggedBellState FlaggedBellState::unflagged(double A, double B, double C, double D) {
  FlaggedBellState s;
  s.at(kPhiPlus, kPhiPlus) = A;
  s.at(kPsiMinus, kPhiPlus) = B;
  s.at(kPsiPlus, kPhiPlus) = C;
  s.at(kPhiMinus, kPhiPlus) = D;
  s.validate();
  return s;
}

FlaggedBellState FlaggedBellState::werner(double F) {
  const double r = (1 - F) / 3;
  return unflagged(F, r, r, r);
}

FlaggedBellState FlaggedBellState::from_binary(const FlaggedBinaryState& b) {
  FlaggedBellState s;
  s.at(kPhiPlus, kPhiPlus) = b.A0;
  s.at(kPhiPlus, kPsiPlus) = b.A1;
  s.at(kPsiPlus, kPhiPlus) = b.B0;
  s.at(kPsiPlus, kPsiPlus) = b.B1;
  return s;
}

double FlaggedBellState::sum() const {
  double t = 0;
  for (const auto& row : c) t += std::accumulate(row.begin(), row.end(), 0.0);
  return t;
}

double FlaggedBellState::fidelity() const {
  const auto& row = c[kPhiPlus.value()];
  return std::accumulate(row.begin(), row.end(), 0.0);
}

double FlaggedBellState::conditional_fidelity() const {
  double t = 0;
  for (int k = 0; k < 4; ++k) t += c[k][k];
  return t;
}

std::array<double, 4> FlaggedBellState::bell_weights() const {
  std::array<double, 4> w{};
  for (int b = 0; b < 4; ++b) w[b] = std::accumulate(c[b].begin(), c[b].end(), 0.0);
  return w;
}

double FlaggedBellState::flag_information() const {
  const double total = sum();
  if (!(total > 0)) return 0;
  std::array<double, 4> pb{}, pf{};
  for (int b = 0; b < 4; ++b)
    for (int l = 0; l < 4; ++l) pb[b] += c[b][l] / total, pf[l] += c[b][l] / total;
  double info = 0;
  for (int b = 0; b < 4; ++b)
    for (int l = 0; l < 4; ++l) {
      const double p = c[b][l] / total;
      if (p > 0) info += p * std::log2(p / (pb[b] * pf[l]));
    }
  return std::max(info, 0.0);
}

void FlaggedBellState::validate(double tol) const {
  for (const auto& row : c)
    for (double x : row)
      if (!(x >= 0)) throw QuantumError("flagged Bell coefficients must be nonnegative");
  if (std::abs(sum() - 1) > tol) throw QuantumError("flagged Bell coefficients must sum to 1");
}

BellIndex flag_update(BellIndex flag_src, BellIndex flag_tgt, int mu, int nu) {
  const bell::StepImage img = bell::protocol_step(flag_src, flag_tgt, mu, nu);
  return img.kept ? img.source : kPhiPlus;
}

BellStepResult bell_step(const FlaggedBellState& s, const PauliNoiseSpec& f) {
  s.validate();
  BellStepResult out;
  double N = 0;
  for (int mu = 0; mu < 4; ++mu) {
    for (int nu = 0; nu < 4; ++nu) {
      const double w_noise = f(mu, nu);
      if (w_noise == 0) continue;
      std::array<std::array<BellIndex, 4>, 4> flag_out;
      for (int fs = 0; fs < 4; ++fs)
        for (int ft = 0; ft < 4; ++ft) flag_out[fs][ft] = flag_update(BellIndex(fs), BellIndex(ft), mu, nu);
      for (int bs = 0; bs < 4; ++bs) {
        for (int bt = 0; bt < 4; ++bt) {
          const bell::StepImage img = bell::protocol_step(BellIndex(bs), BellIndex(bt), mu, nu);
          if (!img.kept) continue;
          for (int fs = 0; fs < 4; ++fs) {
            const double ws = s.c[bs][fs];
            if (ws == 0) continue;
            for (int ft = 0; ft < 4; ++ft) {
              const double w = w_noise * ws * s.c[bt][ft];
              if (w == 0) continue;
              out.state.at(img.source, flag_out[fs][ft]) += w;
              N += w;
            }
          }
        }
      }
    }
  }
  if (!(N > 0)) throw NumericError("bell_step: vanishing success probability");
  for (auto& row : out.state.c)
    for (double& x : row) x /= N;
  out.p_success = N;
  return out;
}

std::vector<BellRow> bell_trajectory(const FlaggedBellState& s0, const PauliNoiseSpec& f, int rounds) {
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  s0.validate();
  std::vector<BellRow> rows{{0, s0, 1}};
  for (int r = 1; r <= rounds; ++r) {
    const BellStepResult res = bell_step(rows.back().state, f);
    rows.push_back({r, res.state, res.p_success});
  }
  return rows;
}

std::string coefficient_name(BellIndex bell, BellIndex flag) {
  static const char letter[4] = {'A', 'C', 'D', 'B'};  // BellIndex order -> Phi+, Psi+, Phi-, Psi-
  std::string name(1, letter[bell.value()]);
  name += static_cast<char>('0' + flag.phase_bit());
  name += static_cast<char>('0' + flag.parity_bit());
  return name;
}

namespace {

// Column order: A, B, C, D (Phi+, Psi-, Psi+, Phi-), each with flags 00..11.
constexpr std::array<BellIndex, 4> kCsvBellOrder{kPhiPlus, kPsiMinus, kPsiPlus, kPhiMinus};

void write_coefficient_header(std::ostream& out) {
  for (BellIndex b : kCsvBellOrder)
    for (int l = 0; l < 4; ++l) out << ',' << coefficient_name(b, BellIndex(l));
}

void write_coefficients(std::ostream& out, const FlaggedBellState& s) {
  for (BellIndex b : kCsvBellOrder)
    for (int l = 0; l < 4; ++l) out << ',' << s.at(b, BellIndex(l));
}

}  // namespace

void write_bell_csv(std::ostream& out, const std::vector<BellRow>& rows) {
  const auto old = out.precision(15);
  out << "round";
  write_coefficient_header(out);
  out << ",F,F_cond\n";
  for (const auto& r : rows) {
    out << r.round;
    write_coefficients(out, r.state);
    out << ',' << r.state.fidelity() << ',' << r.state.conditional_fidelity() << '\n';
  }
  out.precision(old);
}

// ---------------------------------------------------------------------------

void randomize_ensemble(std::vector<FlaggedPair>& pairs, Rng& rng) {
  if (pairs.empty()) throw std::invalid_argument("randomize_ensemble: empty ensemble");
  for (std::size_t i = 0; i < pairs.size(); ++i) (void)uniform_index(rng, 4);
  shuffle(pairs.begin(), pairs.end(), rng);
}

namespace {

void check_pairs(const DensityOperator& rho, int n_pairs) {
  if (n_pairs < 1 || rho.n_qubits() != 2 * n_pairs)
    throw QuantumError("ensemble state must hold exactly 2 * n_pairs qubits");
}

Matrix bilateral(const Matrix& m, int n_qubits, int pair, int k) {
  Matrix out = m;
  const std::array<PauliTerm, 2> terms{PauliTerm{2 * pair, k}, PauliTerm{2 * pair + 1, k}};
  detail::conjugate_pauli(out, n_qubits, terms);
  return out;
}

}  // namespace

DensityOperator permute_pairs(const DensityOperator& rho, const std::vector<int>& perm) {
  const int n_qubits = rho.n_qubits();
  const int n_pairs = static_cast<int>(perm.size());
  check_pairs(rho, n_pairs);
  std::vector<int> seen(perm.size(), 0);
  for (int p : perm) {
    if (p < 0 || p >= n_pairs || seen[p]++) throw QuantumError("permute_pairs: not a permutation");
  }
  const auto dim = static_cast<std::uint64_t>(rho.dim());
  std::vector<Eigen::Index> image(dim);
  for (std::uint64_t i = 0; i < dim; ++i) {
    std::uint64_t j = 0;
    for (int pair = 0; pair < n_pairs; ++pair) {
      for (int e = 0; e < 2; ++e) {
        const int from = 2 * pair + e, to = 2 * perm[pair] + e;
        if (i >> (n_qubits - 1 - from) & 1) j |= std::uint64_t{1} << (n_qubits - 1 - to);
      }
    }
    image[i] = static_cast<Eigen::Index>(j);
  }
  Matrix out(rho.matrix().rows(), rho.matrix().cols());
  for (std::uint64_t r = 0; r < dim; ++r)
    for (std::uint64_t c = 0; c < dim; ++c) out(image[r], image[c]) = rho.matrix()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return DensityOperator(n_qubits, std::move(out));
}

DensityOperator randomize_ensemble(const DensityOperator& rho, int n_pairs, Rng& rng) {
  check_pairs(rho, n_pairs);
  Matrix m = rho.matrix();
  for (int j = 0; j < n_pairs; ++j) m = bilateral(m, rho.n_qubits(), j, static_cast<int>(uniform_index(rng, 4)));
  std::vector<int> perm(static_cast<std::size_t>(n_pairs));
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm.begin(), perm.end(), rng);
  return permute_pairs(DensityOperator(rho.n_qubits(), std::move(m)), perm);
}

DensityOperator randomize_ensemble_exact(const DensityOperator& rho, int n_pairs) {
  check_pairs(rho, n_pairs);
  if (n_pairs > 4) throw QuantumError("randomize_ensemble_exact: at most 4 pairs");
  const int n = rho.n_qubits();
  Matrix twirled = rho.matrix();
  for (int j = 0; j < n_pairs; ++j) {
    Matrix acc = Matrix::Zero(twirled.rows(), twirled.cols());
    for (int k = 0; k < 4; ++k) acc += bilateral(twirled, n, j, k);
    twirled = acc / 4.0;
  }
  const DensityOperator t(n, std::move(twirled));
  std::vector<int> perm(static_cast<std::size_t>(n_pairs));
  std::iota(perm.begin(), perm.end(), 0);
  Matrix acc = Matrix::Zero(t.matrix().rows(), t.matrix().cols());
  int count = 0;
  do {
    acc += permute_pairs(t, perm).matrix();
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return DensityOperator(n, acc / static_cast<double>(count));
}

// ---------------------------------------------------------------------------

FlaggedBellState MonteCarloRound::estimate() const {
  FlaggedBellState s;
  if (pairs == 0) return s;
  for (int b = 0; b < 4; ++b)
    for (int l = 0; l < 4; ++l) s.c[b][l] = static_cast<double>(counts[b][l]) / static_cast<double>(pairs);
  return s;
}

namespace {

struct SliceHistory {
  std::vector<std::array<std::array<std::uint64_t, 4>, 4>> counts;
  std::vector<std::uint64_t> attempted, kept;
};

std::array<std::array<std::uint64_t, 4>, 4> tally(const std::vector<FlaggedPair>& pairs) {
  std::array<std::array<std::uint64_t, 4>, 4> c{};
  for (const auto& p : pairs) ++c[p.bell.value()][p.flag.value()];
  return c;
}

SliceHistory run_slice(std::size_t size, const std::array<double, 16>& cdf, const PauliNoiseSpec& noise, int rounds,
                       Rng rng) {
  std::vector<FlaggedPair> pairs(size);
  for (auto& p : pairs) {
    const double u = uniform01(rng);
    const auto k = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const int idx = std::min(k, 15);
    p = {BellIndex(idx / 4), BellIndex(idx % 4)};
  }
  SliceHistory h;
  h.counts.push_back(tally(pairs));
  std::vector<FlaggedPair> next;
  for (int r = 1; r <= rounds && pairs.size() >= 2; ++r) {
    randomize_ensemble(pairs, rng);
    next.clear();
    const std::size_t groups = pairs.size() / 2;
    for (std::size_t g = 0; g < groups; ++g) {
      const FlaggedPair& s = pairs[2 * g];
      const FlaggedPair& t = pairs[2 * g + 1];
      const auto [mu, nu] = sample_pauli_pair(noise, rng);
      const bell::StepImage img = bell::protocol_step(s.bell, t.bell, mu, nu);
      if (img.kept) next.push_back({img.source, flag_update(s.flag, t.flag, mu, nu)});
    }
    h.attempted.push_back(groups);
    h.kept.push_back(next.size());
    pairs.swap(next);
    h.counts.push_back(tally(pairs));
  }
  return h;
}

}  // namespace

MonteCarloResult monte_carlo_distill(const FlaggedBellState& initial, const NoiseModel& noise,
                                     const MonteCarloOptions& o) {
  if (o.n_pairs < 2 || o.n_pairs % 2 != 0) throw std::invalid_argument("monte_carlo_distill: n_pairs must be even and >= 2");
  if (o.rounds < 0) throw std::invalid_argument("monte_carlo_distill: rounds must be >= 0");
  if (o.workers < 1) throw std::invalid_argument("monte_carlo_distill: workers must be >= 1");
  initial.validate();
  const PauliNoiseSpec spec = std::holds_alternative<PauliNoiseSpec>(noise)
                                  ? std::get<PauliNoiseSpec>(noise)
                                  : std::get<BinaryNoiseSpec>(noise).to_pauli();
  std::array<double, 16> cdf{};
  double acc = 0;
  for (int k = 0; k < 16; ++k) cdf[k] = acc += initial.c[k / 4][k % 4];

  const auto workers = static_cast<std::size_t>(o.workers);
  std::vector<SliceHistory> hist(workers);
  auto slice_size = [&](std::size_t w) { return o.n_pairs / workers + (w < o.n_pairs % workers ? 1 : 0); };
  if (workers == 1) {
    hist[0] = run_slice(o.n_pairs, cdf, spec, o.rounds, derive_stream(o.seed, 0));
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] { hist[w] = run_slice(slice_size(w), cdf, spec, o.rounds, derive_stream(o.seed, w)); });
    for (auto& t : pool) t.join();
  }

  MonteCarloResult res;
  for (int r = 0; r <= o.rounds; ++r) {
    MonteCarloRound round;
    round.round = r;
    std::uint64_t attempted = 0, kept = 0;
    bool any = false;
    for (const auto& h : hist) {
      if (static_cast<std::size_t>(r) >= h.counts.size()) continue;
      any = true;
      for (int b = 0; b < 4; ++b)
        for (int l = 0; l < 4; ++l) round.counts[b][l] += h.counts[static_cast<std::size_t>(r)][b][l];
      if (r > 0) attempted += h.attempted[static_cast<std::size_t>(r) - 1], kept += h.kept[static_cast<std::size_t>(r) - 1];
    }
    if (!any) {
      res.truncated = true;
      res.note = "ensemble exhausted after round " + std::to_string(r - 1) + " of " + std::to_string(o.rounds);
      break;
    }
    for (const auto& row : round.counts) round.pairs += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
    round.p_success = r == 0 ? 1.0 : (attempted ? static_cast<double>(kept) / attempted : 0.0);
    res.rounds.push_back(round);
  }
  return res;
}

void write_monte_carlo_csv(std::ostream& out, const MonteCarloResult& r) {
  const auto old = out.precision(15);
  out << "round,pairs";
  write_coefficient_header(out);
  out << ",F,F_cond,p_success\n";
  for (const auto& row : r.rounds) {
    const FlaggedBellState s = row.estimate();
    out << row.round << ',' << row.pairs;
    write_coefficients(out, s);
    out << ',' << s.fidelity() << ',' << s.conditional_fidelity() << ',' << row.p_success << '\n';
  }
  out.precision(old);
}

}  // namespace qcomm
