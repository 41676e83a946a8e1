#include "qcomm/epp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace qcomm {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

double clamp_roundoff(double x) {
  if (x < 0 && x > -1e-12) return 0;
  return x;
}

void depolarize_qubits(Matrix& m, double p, std::initializer_list<int> qubits) {
  if (p >= 1) return;
  m = detail::depolarize(m, 4, p, std::span<const int>(qubits.begin(), qubits.size()));
}

}  // namespace

BellDiagonal BellDiagonal::werner(double F) {
  if (!(F >= 0 && F <= 1)) throw QuantumError("Werner fidelity must lie in [0, 1]");
  const double r = (1 - F) / 3;
  return {F, r, r, r};
}

BellDiagonal BellDiagonal::from_density(const DensityOperator& rho) {
  const BellDecomposition d = bell_decompose(rho);
  return {clamp_roundoff(d.A), clamp_roundoff(d.B), clamp_roundoff(d.C), clamp_roundoff(d.D)};
}

BellDiagonal BellDiagonal::from_bell_weights(const std::array<double, 4>& w) {
  return {w[kPhiPlus.value()], w[kPsiMinus.value()], w[kPsiPlus.value()], w[kPhiMinus.value()]};
}

DensityOperator BellDiagonal::to_density() const {
  validate();
  Matrix m = Matrix::Zero(4, 4);
  const auto w = bell_weights();
  for (int k = 0; k < 4; ++k) {
    const Vector v = bell_state(BellIndex(k)).amplitudes();
    m += w[k] * v * v.adjoint();
  }
  return DensityOperator(2, std::move(m));
}

void BellDiagonal::validate(double tol) const {
  if (!(A >= 0 && B >= 0 && C >= 0 && D >= 0)) throw QuantumError("Bell-diagonal weights must be nonnegative");
  if (std::abs(sum() - 1) > tol) throw QuantumError("Bell-diagonal weights must sum to 1");
}

StepResult oxford_step(const BellDiagonal& s) {
  s.validate();
  const double N = (s.A + s.B) * (s.A + s.B) + (s.C + s.D) * (s.C + s.D);
  if (!(N > 0)) throw NumericError("oxford_step: vanishing success probability");
  return {{(s.A * s.A + s.B * s.B) / N, 2 * s.C * s.D / N, (s.C * s.C + s.D * s.D) / N, 2 * s.A * s.B / N}, N};
}

BellDiagonal werner_twirl(const BellDiagonal& s) {
  s.validate();
  const double r = (1 - s.A) / 3;
  return {s.A, r, r, r};
}

StepResult ibm_step(const BellDiagonal& s) {
  StepResult r = oxford_step(werner_twirl(s));
  r.state = werner_twirl(r.state);
  return r;
}

std::pair<DensityOperator, double> purification_step_dense(const DensityOperator& four_qubits,
                                                           const DenseStepOptions& options) {
  if (four_qubits.n_qubits() != 4) throw QuantumError("purification step expects 4 qubits");
  const ApparatusNoise& noise = options.apparatus;
  const NoisePlacement& where = options.placement;
  noise.validate();

  Matrix m = four_qubits.matrix();
  const std::array<std::pair<int, double>, 4> rotations{{{0, kHalfPi}, {2, kHalfPi}, {1, -kHalfPi}, {3, -kHalfPi}}};
  for (const auto& [q, theta] : rotations) {
    detail::conjugate(m, 4, gate::RotX{q, theta});
    if (where.after_rotations) depolarize_qubits(m, noise.p1, {q});
  }
  if (options.alice_noise) m = detail::correlated_pauli(m, 4, *options.alice_noise, 0, 2);

  for (const auto& [c, t] : {std::pair{0, 2}, std::pair{1, 3}}) {
    detail::conjugate(m, 4, gate::CNOT{c, t});
    if (!where.after_cnots) continue;
    if (where.joint_cnot_channel) {
      depolarize_qubits(m, noise.p2, {c, t});
    } else {
      depolarize_qubits(m, noise.p2, {c});
      depolarize_qubits(m, noise.p2, {t});
    }
  }

  const double eta = where.at_measurements ? noise.eta : 1.0;
  Matrix kept = Matrix::Zero(16, 16);
  for (int r = 0; r < 2; ++r) {
    if (eta < 1) {
      kept += detail::povm_branch(detail::povm_branch(m, 2, 4, eta, r), 3, 4, eta, r);
    } else {
      kept += detail::z_project(detail::z_project(m, 2, 4, r), 3, 4, r);
    }
  }
  const std::array<int, 2> keep{0, 1};
  Matrix reduced = detail::partial_trace(kept, 4, keep);
  const double p = reduced.trace().real();
  if (!(p > 1e-300)) throw NumericError("purification step: vanishing success probability");
  reduced = (reduced + reduced.adjoint().eval()) / (2 * p);
  return {DensityOperator(2, std::move(reduced)), p};
}

StepResult oxford_step_dense(const DensityOperator& pair, const DenseStepOptions& options) {
  if (pair.n_qubits() != 2) throw QuantumError("oxford_step_dense expects a 2-qubit pair");
  const auto [out, p] = purification_step_dense(pair.tensor(pair), options);
  return {BellDiagonal::from_density(out), p};
}

StepResult noisy_step(const BellDiagonal& s, const ApparatusNoise& noise, const NoisePlacement& placement) {
  DenseStepOptions options;
  options.apparatus = noise;
  options.placement = placement;
  return oxford_step_dense(s.to_density(), options);
}

Stepper oxford_stepper() { return [](const BellDiagonal& s) { return oxford_step(s); }; }

Stepper ibm_stepper() { return [](const BellDiagonal& s) { return ibm_step(s); }; }

Stepper noisy_stepper(const ApparatusNoise& noise, bool twirl, const NoisePlacement& placement) {
  noise.validate();
  return [noise, twirl, placement](const BellDiagonal& s) {
    StepResult r = noisy_step(twirl ? werner_twirl(s) : s, noise, placement);
    if (twirl) r.state = werner_twirl(r.state);
    return r;
  };
}

Stepper make_stepper(const std::string& name, const ApparatusNoise& noise) {
  if (name == "oxford") return oxford_stepper();
  if (name == "ibm") return ibm_stepper();
  if (name == "noisy-oxford") return noisy_stepper(noise, false);
  if (name == "noisy-ibm") return noisy_stepper(noise, true);
  throw std::invalid_argument("unknown stepper '" + name + "' (expected oxford, ibm, noisy-oxford, noisy-ibm)");
}

double werner_map(const Stepper& step, double F) { return step(BellDiagonal::werner(F)).state.A; }

// ---------------------------------------------------------------------------

Trajectory distill(const BellDiagonal& s0, int rounds, const Stepper& step) {
  if (rounds < 0) throw std::invalid_argument("distill: rounds must be >= 0");
  s0.validate();
  Trajectory t;
  t.rows.reserve(static_cast<std::size_t>(rounds) + 1);
  t.rows.push_back({0, s0, 1.0, 1.0});
  for (int r = 1; r <= rounds; ++r) {
    const StepResult res = step(t.rows.back().state);
    t.rows.push_back({r, res.state, res.p_success, t.rows.back().yield * res.p_success / 2});
  }
  return t;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  const auto old = out.precision(15);
  out << "round,A,B,C,D,F,p_success,yield\n";
  for (const auto& r : t.rows) {
    out << r.round << ',' << r.state.A << ',' << r.state.B << ',' << r.state.C << ',' << r.state.D << ','
        << r.state.fidelity() << ',' << r.p_success << ',' << r.yield << '\n';
  }
  out.precision(old);
}

// ---------------------------------------------------------------------------

const char* stability_name(Stability s) {
  switch (s) {
    case Stability::attractive: return "attractive";
    case Stability::repulsive: return "repulsive";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

namespace {

double map_derivative(const Stepper& step, double F, double lo, double hi) {
  constexpr double h = 1e-6;
  auto m = [&](double x) { return werner_map(step, x); };
  if (F - h < lo) return (-3 * m(F) + 4 * m(F + h) - m(F + 2 * h)) / (2 * h);
  if (F + h > hi) return (3 * m(F) - 4 * m(F - h) + m(F - 2 * h)) / (2 * h);
  return (m(F + h) - m(F - h)) / (2 * h);
}

Stability classify(double derivative) {
  constexpr double margin = 1e-8;
  const double r = std::abs(derivative);
  if (r < 1 - margin) return Stability::attractive;
  if (r > 1 + margin) return Stability::repulsive;
  return Stability::marginal;
}

}  // namespace

ScanResult fixpoint_scan(const Stepper& step, const ScanOptions& o) {
  if (!(o.lo >= 0.25 && o.hi <= 1 && o.lo < o.hi) || o.grid < 2)
    throw std::invalid_argument("fixpoint_scan: need 1/4 <= lo < hi <= 1 and grid >= 2");
  constexpr double kZero = 1e-14;
  auto g = [&](double F) { return werner_map(step, F) - F; };

  std::vector<double> xs(static_cast<std::size_t>(o.grid) + 1), gs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = i + 1 == xs.size() ? o.hi : o.lo + (o.hi - o.lo) * static_cast<double>(i) / o.grid;
    gs[i] = g(xs[i]);
  }

  std::vector<double> roots;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::abs(gs[i]) <= kZero) {
      if (roots.empty() || xs[i] - roots.back() > 2 * (o.hi - o.lo) / o.grid) roots.push_back(xs[i]);
      continue;
    }
    if (i + 1 < xs.size() && std::abs(gs[i + 1]) > kZero && (gs[i] < 0) != (gs[i + 1] < 0)) {
      double a = xs[i], b = xs[i + 1];
      const bool a_negative = gs[i] < 0;
      while (b - a > o.tolerance * 1e-2) {
        const double mid = 0.5 * (a + b);
        if ((g(mid) < 0) == a_negative) a = mid; else b = mid;
      }
      roots.push_back(0.5 * (a + b));
    }
  }

  ScanResult result;
  for (double r : roots) {
    FixpointReport rep;
    rep.location = r;
    rep.derivative = map_derivative(step, r, o.lo, o.hi);
    rep.stability = classify(rep.derivative);
    result.fixpoints.push_back(rep);
  }

  for (int k = 0; k < o.basin_samples; ++k) {
    BasinSample sample;
    sample.start = o.lo + (o.hi - o.lo) * (k + 0.5) / o.basin_samples;
    double F = sample.start;
    for (int it = 0; it < o.iteration_cap; ++it) {
      const double next = std::clamp(werner_map(step, F), 0.25, 1.0);
      const bool settled = std::abs(next - F) < 1e-13;
      F = next;
      if (settled) {
        sample.converged = true;
        break;
      }
    }
    sample.limit = F;
    FixpointReport* nearest = nullptr;
    for (auto& rep : result.fixpoints)
      if (std::abs(rep.location - F) < 1e-6) nearest = &rep;
    if (sample.converged && nearest) {
      nearest->basin.push_back(sample);
    } else {
      result.diagnostics.push_back("start F=" + std::to_string(sample.start) + " did not settle on a fixpoint after " +
                                   std::to_string(o.iteration_cap) + " iterations (last F=" + std::to_string(F) + ")");
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

NoiseAxis parse_noise_axis(const std::string& name) {
  if (name == "p1") return NoiseAxis::p1;
  if (name == "p2") return NoiseAxis::p2;
  if (name == "eta") return NoiseAxis::eta;
  throw std::invalid_argument("unknown noise axis '" + name + "' (expected p1, p2, eta)");
}

const char* noise_axis_name(NoiseAxis axis) {
  switch (axis) {
    case NoiseAxis::p1: return "p1";
    case NoiseAxis::p2: return "p2";
    case NoiseAxis::eta: return "eta";
  }
  return "?";
}

std::pair<double, double> max_purification_gain(const Stepper& step) {
  constexpr int kGrid = 150;
  auto g = [&](double F) { return werner_map(step, F) - F; };
  int best = 0;
  double best_gain = -1;
  for (int i = 0; i <= kGrid; ++i) {
    const double F = 0.25 + 0.75 * i / kGrid;
    const double v = g(F);
    if (v > best_gain) best_gain = v, best = i;
  }
  double a = 0.25 + 0.75 * std::max(best - 1, 0) / kGrid;
  double b = 0.25 + 0.75 * std::min(best + 1, kGrid) / kGrid;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double g1 = g(x1), g2 = g(x2);
  for (int it = 0; it < 60; ++it) {
    if (g1 < g2) {
      a = x1, x1 = x2, g1 = g2;
      x2 = a + phi * (b - a), g2 = g(x2);
    } else {
      b = x2, x2 = x1, g2 = g1;
      x1 = b - phi * (b - a), g1 = g(x1);
    }
  }
  const double x = g1 > g2 ? x1 : x2;
  const double v = std::max(g1, g2);
  if (v > best_gain) return {v, x};
  return {best_gain, 0.25 + 0.75 * best / kGrid};
}

bool purifiable(const ApparatusNoise& noise, const NoisePlacement& placement) {
  return max_purification_gain(noisy_stepper(noise, true, placement)).first > 1e-12;
}

ThresholdResult threshold_search(NoiseAxis axis, const ApparatusNoise& base, double tolerance,
                                 const NoisePlacement& placement) {
  if (!(tolerance > 0)) throw std::invalid_argument("threshold_search: tolerance must be positive");
  base.validate();
  auto with = [&](double x) {
    ApparatusNoise n = base;
    (axis == NoiseAxis::p1 ? n.p1 : axis == NoiseAxis::p2 ? n.p2 : n.eta) = x;
    return n;
  };
  auto ok = [&](double x) { return purifiable(with(x), placement); };

  ThresholdResult res;
  res.axis = axis;
  double lo = 0.5, hi = 1.0;
  if (!ok(hi))
    throw NumericError(std::string("threshold_search: no purification even at ") + noise_axis_name(axis) +
                       " = 1 with the other reliabilities fixed");
  if (ok(lo))
    throw NumericError(std::string("threshold_search: still purifying at ") + noise_axis_name(axis) +
                       " = 0.5; no breakdown inside the bracket");

  bool seen_true = false;
  for (int k = 1; k < 10; ++k) {
    const bool v = ok(lo + (hi - lo) * k / 10);
    if (seen_true && !v) res.monotone = false;
    seen_true = seen_true || v;
  }

  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
    ++res.iterations;
  }
  res.lower = lo;
  res.upper = hi;
  res.critical = hi;
  return res;
}

}  // namespace qcomm
