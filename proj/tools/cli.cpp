#include "qcomm/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "qcomm/demon.hpp"
#include "qcomm/epp.hpp"
#include "qcomm/qkd.hpp"
#include "qcomm/shor.hpp"

#ifndef QCOMM_VERSION
#define QCOMM_VERSION "dev"
#endif

namespace qcomm::cli {

namespace {

// Parameter object with a fixed key set per command.
class Params {
 public:
  Params(const Json& j, std::set<std::string> allowed) : j_(j) {
    if (!j_.is_object()) throw ConfigError("config", "expected a JSON object");
    allowed.insert("_comment");
    for (const auto& [key, value] : j_.items())
      if (!allowed.count(key)) throw ConfigError(key, "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const Json& at(const std::string& key) const { return j_.at(key); }

  double number(const std::string& key, double fallback) const { return get_number_or(j_, key, fallback, ""); }

  double number_in(const std::string& key, double fallback, double lo, double hi) const {
    const double x = number(key, fallback);
    if (!(x >= lo && x <= hi))
      throw ConfigError(key, "must lie in [" + fmt(lo) + ", " + fmt(hi) + "]");
    return x;
  }

  long long integer(const std::string& key, long long fallback, long long lo, long long hi) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number_integer() && !(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()))
      throw ConfigError(key, "expected an integer");
    const auto x = static_cast<long long>(v.get<double>());
    if (x < lo || x > hi) throw ConfigError(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_string()) throw ConfigError(key, "expected a string");
    return at(key).get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_boolean()) throw ConfigError(key, "expected true or false");
    return at(key).get<bool>();
  }

 private:
  static std::string fmt(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
  }
  const Json& j_;
};

// Correlated noise used for the binary flagged trajectory figure.
BinaryNoiseSpec default_binary_noise() { return BinaryNoiseSpec({{{0.8575, 0.0475}, {0.0475, 0.0475}}}); }

// Correlated Pauli noise for the 16-coefficient figure; the printed table
// sums to 1.000004 and is rescaled.
PauliNoiseSpec default_pauli_noise() {
  PauliNoiseSpec::Table t{};
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) t[mu][nu] = (mu == 0 && nu == 0) ? 0.83981 : (mu == 0 || nu == 0) ? 0.021131 : 0.003712;
  return PauliNoiseSpec::normalized(t);
}

bool is_binary_noise(const Json& j) {
  if (!j.is_object()) return false;
  if (j.contains("f0")) return true;
  return j.contains("f") && j["f"].is_array() && j["f"].size() == 2;
}

BellDiagonal parse_bell_diagonal(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (j.contains("werner")) {
    const double F = get_number(j, "werner", path);
    if (!(F >= 0 && F <= 1)) throw ConfigError(path + ".werner", "must lie in [0, 1]");
    return BellDiagonal::werner(F);
  }
  BellDiagonal s{get_number(j, "A", path), get_number(j, "B", path), get_number(j, "C", path),
                 get_number(j, "D", path)};
  try {
    s.validate(1e-9);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

NoisePlacement parse_placement(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  NoisePlacement p;
  auto read = [&](const char* key, bool& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw ConfigError(path + "." + key, "expected true or false");
    field = j[key].get<bool>();
  };
  read("after_rotations", p.after_rotations);
  read("after_cnots", p.after_cnots);
  read("joint_cnot_channel", p.joint_cnot_channel);
  read("at_measurements", p.at_measurements);
  return p;
}

Stepper build_stepper(const Params& p) {
  const ApparatusNoise noise = p.has("apparatus") ? parse_apparatus(p.at("apparatus")) : ApparatusNoise{};
  const std::string name = p.text("stepper", "ibm");
  if (p.has("placement")) {
    const NoisePlacement placement = parse_placement(p.at("placement"), "placement");
    if (name == "noisy-oxford") return noisy_stepper(noise, false, placement);
    if (name == "noisy-ibm") return noisy_stepper(noise, true, placement);
    throw ConfigError("placement", "only valid with the noisy steppers");
  }
  try {
    return make_stepper(name, noise);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("stepper", e.what());
  }
}

void write_header(std::ostream& out, const ExperimentConfig& c) {
  const Json h = header(c);
  out << "# qcomm " << h["version"].get<std::string>() << " " << c.command << "\n";
  out << "# config " << h["config"].dump() << "\n";
}

void emit_json(std::ostream& out, const ExperimentConfig& c, Json body) {
  body["_header"] = header(c);
  out << body.dump(2) << "\n";
}

using Command = std::function<int(const ExperimentConfig&, std::ostream&, std::ostream&)>;

int cmd_purify_curve(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const Params p(c.params, {"stepper", "apparatus", "placement", "points", "initial", "rounds"});
  const Stepper step = build_stepper(p);
  write_header(out, c);
  if (p.has("rounds") || p.has("initial")) {
    const int rounds = static_cast<int>(p.integer("rounds", 20, 0, 100000));
    const BellDiagonal s0 = p.has("initial") ? parse_bell_diagonal(p.at("initial"), "initial") : BellDiagonal::werner(0.7);
    write_trajectory_csv(out, distill(s0, rounds, step));
    return kExitOk;
  }
  const int points = static_cast<int>(p.integer("points", 301, 2, 1000000));
  out << "F,F_prime,p_success\n";
  out.precision(15);
  for (int i = 0; i < points; ++i) {
    const double F = 0.25 + 0.75 * i / (points - 1);
    const StepResult r = step(BellDiagonal::werner(F));
    out << F << "," << r.state.fidelity() << "," << r.p_success << "\n";
  }
  return kExitOk;
}

int cmd_fixpoint_scan(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const Params p(c.params, {"stepper", "apparatus", "placement", "lo", "hi", "grid", "tolerance", "basin_samples",
                            "iteration_cap"});
  const Stepper step = build_stepper(p);
  ScanOptions o;
  o.lo = p.number_in("lo", o.lo, 0.25, 1);
  o.hi = p.number_in("hi", o.hi, 0.25, 1);
  if (!(o.lo < o.hi)) throw ConfigError("lo", "must be below hi");
  o.grid = static_cast<int>(p.integer("grid", o.grid, 10, 1000000));
  o.tolerance = p.number_in("tolerance", o.tolerance, 1e-15, 1e-2);
  o.basin_samples = static_cast<int>(p.integer("basin_samples", o.basin_samples, 0, 10000));
  o.iteration_cap = static_cast<int>(p.integer("iteration_cap", o.iteration_cap, 1, 100000000));
  const ScanResult r = fixpoint_scan(step, o);
  Json fps = Json::array();
  for (const auto& f : r.fixpoints) {
    Json basin = Json::array();
    for (const auto& b : f.basin) basin.push_back({{"start", b.start}, {"converged", b.converged}, {"limit", b.limit}});
    fps.push_back({{"location", f.location},
                   {"stability", stability_name(f.stability)},
                   {"derivative", f.derivative},
                   {"basin", basin}});
  }
  for (const auto& d : r.diagnostics) err << "fixpoint-scan: " << d << "\n";
  emit_json(out, c, {{"fixpoints", fps}, {"diagnostics", r.diagnostics}});
  return kExitOk;
}

int cmd_threshold_search(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const Params p(c.params, {"axes", "apparatus", "placement", "tolerance"});
  const ApparatusNoise base = p.has("apparatus") ? parse_apparatus(p.at("apparatus")) : ApparatusNoise{};
  const NoisePlacement placement = p.has("placement") ? parse_placement(p.at("placement"), "placement") : NoisePlacement{};
  const double tol = p.number_in("tolerance", 1e-4, 1e-10, 0.1);
  std::vector<NoiseAxis> axes{NoiseAxis::p2, NoiseAxis::eta, NoiseAxis::p1};
  if (p.has("axes")) {
    const Json& a = p.at("axes");
    if (!a.is_array() || a.empty()) throw ConfigError("axes", "expected a nonempty array of axis names");
    axes.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string path = "axes[" + std::to_string(i) + "]";
      if (!a[i].is_string()) throw ConfigError(path, "expected a string");
      try {
        axes.push_back(parse_noise_axis(a[i].get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
      }
    }
  }
  Json results = Json::array();
  for (NoiseAxis axis : axes) {
    const ThresholdResult r = threshold_search(axis, base, tol, placement);
    results.push_back({{"axis", noise_axis_name(r.axis)},
                       {"critical", r.critical},
                       {"one_minus_critical", 1 - r.critical},
                       {"lower", r.lower},
                       {"upper", r.upper},
                       {"iterations", r.iterations},
                       {"monotone", r.monotone}});
  }
  emit_json(out, c, {{"thresholds", results}});
  return kExitOk;
}

int cmd_demon_binary(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const Params p(c.params, {"noise", "F0", "rounds"});
  const BinaryNoiseSpec f = p.has("noise") ? parse_binary_noise(p.at("noise")) : default_binary_noise();
  const double F0 = p.number_in("F0", 0.8, 0, 1);
  const int rounds = static_cast<int>(p.integer("rounds", 40, 0, 10000000));
  write_header(out, c);
  write_binary_csv(out, binary_trajectory(FlaggedBinaryState::unflagged(F0), f, rounds));
  return kExitOk;
}

int cmd_demon_bell(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const Params p(c.params, {"noise", "initial", "rounds"});
  const PauliNoiseSpec f = p.has("noise") ? parse_pauli_noise(p.at("noise")) : default_pauli_noise();
  const BellDiagonal s0 = p.has("initial") ? parse_bell_diagonal(p.at("initial"), "initial") : BellDiagonal::werner(0.8);
  const int rounds = static_cast<int>(p.integer("rounds", 100, 0, 10000000));
  write_header(out, c);
  write_bell_csv(out, bell_trajectory(FlaggedBellState::unflagged(s0.A, s0.B, s0.C, s0.D), f, rounds));
  return kExitOk;
}

int cmd_demon_mc(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const Params p(c.params, {"noise", "initial", "F0", "n_pairs", "rounds"});
  NoiseModel noise = default_binary_noise();
  if (p.has("noise")) {
    if (is_binary_noise(p.at("noise")))
      noise = parse_binary_noise(p.at("noise"));
    else
      noise = parse_pauli_noise(p.at("noise"));
  }
  FlaggedBellState s0;
  if (p.has("initial")) {
    if (p.has("F0")) throw ConfigError("F0", "give either F0 or initial");
    const BellDiagonal b = parse_bell_diagonal(p.at("initial"), "initial");
    s0 = FlaggedBellState::unflagged(b.A, b.B, b.C, b.D);
  } else {
    const double F0 = p.number_in("F0", 0.8, 0, 1);
    s0 = std::holds_alternative<BinaryNoiseSpec>(noise)
             ? FlaggedBellState::from_binary(FlaggedBinaryState::unflagged(F0))
             : FlaggedBellState::werner(F0);
  }
  MonteCarloOptions o;
  o.n_pairs = static_cast<std::size_t>(p.integer("n_pairs", 1000000, 2, 1000000000));
  o.rounds = static_cast<int>(p.integer("rounds", 10, 0, 1000));
  o.seed = c.seed;
  o.workers = c.workers;
  const MonteCarloResult r = monte_carlo_distill(s0, noise, o);
  if (r.truncated) err << "demon-mc: " << r.note << "\n";
  write_header(out, c);
  write_monte_carlo_csv(out, r);
  return kExitOk;
}

int cmd_regime_map(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const Params p(c.params, {"f0", "lo", "hi", "points", "F0", "iteration_cap", "tolerance"});
  std::vector<double> grid;
  if (p.has("f0")) {
    const Json& g = p.at("f0");
    if (!g.is_array() || g.empty()) throw ConfigError("f0", "expected a nonempty array of numbers");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::string path = "f0[" + std::to_string(i) + "]";
      if (!g[i].is_number()) throw ConfigError(path, "expected a number");
      grid.push_back(g[i].get<double>());
    }
  } else {
    const double lo = p.number_in("lo", 0.5, 0.5, 1), hi = p.number_in("hi", 1.0, 0.5, 1);
    const int n = static_cast<int>(p.integer("points", 101, 1, 1000000));
    if (n > 1 && !(lo < hi)) throw ConfigError("lo", "must be below hi");
    for (int i = 0; i < n; ++i) grid.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!(grid[i] >= 0.5 && grid[i] <= 1)) throw ConfigError("f0[" + std::to_string(i) + "]", "must lie in [0.5, 1]");
  RegimeMapOptions o;
  o.start = FlaggedBinaryState::unflagged(p.number_in("F0", 0.8, 0, 1));
  o.iteration_cap = static_cast<int>(p.integer("iteration_cap", o.iteration_cap, 1, 1000000000));
  o.tolerance = p.number_in("tolerance", o.tolerance, 0, 1e-3);
  o.workers = c.workers;
  write_header(out, c);
  write_regime_csv(out, regime_map(grid, o));
  return kExitOk;
}

Complex parse_complex(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(path, "expected a number or [re, im]");
}

int cmd_shor_roundtrip(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const Params p(c.params, {"alpha", "beta"});
  shor::LogicalQubit q{Complex(0.6, 0), Complex(0, 0.8)};
  if (p.has("alpha")) q.alpha = parse_complex(p.at("alpha"), "alpha");
  if (p.has("beta")) q.beta = parse_complex(p.at("beta"), "beta");
  try {
    q.validate();
  } catch (const QuantumError& e) {
    throw ConfigError("alpha", e.what());
  }
  Rng rng(c.seed);
  const auto cases = shor::roundtrip_all(q, rng);
  std::size_t ok = 0;
  write_header(out, c);
  out << "error_qubit,mu,syndrome,fidelity,corrected\n";
  out.precision(15);
  for (const auto& r : cases) {
    const bool good = r.fidelity >= 1 - 1e-10;
    ok += good;
    out << r.error.qubit << "," << r.error.mu << "," << r.syndrome.str() << "," << r.fidelity << "," << good << "\n";
  }
  const std::string summary = std::to_string(ok) + "/" + std::to_string(cases.size()) + " corrected";
  out << "# " << summary << "\n";
  err << summary << "\n";
  if (ok != cases.size()) throw NumericError("shor-roundtrip: " + summary);
  return kExitOk;
}

int cmd_qkd_bb84(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const Params p(c.params, {"n", "depolarize", "eve", "sacrifice"});
  qkd::BB84Options o;
  o.n = static_cast<std::size_t>(p.integer("n", 100000, 1, 1000000000));
  const double dep = p.number_in("depolarize", 1.0, 0, 1);
  if (dep < 1) o.channel = qkd::depolarizing_channel(dep);
  o.eve.intercept_fraction = p.number_in("eve", 0.0, 0, 1);
  o.sacrifice_fraction = p.number_in("sacrifice", 0.1, 0, 1);
  Rng rng(c.seed);
  const qkd::BB84Session s = qkd::bb84_run(o, rng);
  Json body{{"n", s.n},
            {"protocol", "bb84"},
            {"qber", s.qber_estimate},
            {"sift_fraction", s.sift_fraction()},
            {"key_length", s.final_key_alice.size()},
            {"seed", c.seed}};
  if (c.emit_key) {
    body["key_alice"] = qkd::to_string(s.final_key_alice);
    body["key_bob"] = qkd::to_string(s.final_key_bob);
  }
  emit_json(out, c, body);
  return kExitOk;
}

int cmd_qkd_e91(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const Params p(c.params, {"n", "werner", "alice_angles", "bob_angles"});
  qkd::E91Options o;
  o.n = static_cast<std::size_t>(p.integer("n", 100000, 1, 1000000000));
  if (p.has("werner")) {
    // Singlet weight F, the rest spread over the other three Bell states.
    const double F = p.number_in("werner", 1.0, 0, 1);
    const double r = (1 - F) / 3;
    o.source = BellDiagonal{r, F, r, r}.to_density();
  }
  auto angles = [&](const char* key, std::array<double, 3>& a) {
    if (!p.has(key)) return;
    const Json& j = p.at(key);
    if (!j.is_array() || j.size() != 3) throw ConfigError(key, "expected three angles in degrees");
    for (int i = 0; i < 3; ++i) {
      if (!j[i].is_number()) throw ConfigError(std::string(key) + "[" + std::to_string(i) + "]", "expected a number");
      a[i] = j[i].get<double>();
    }
  };
  angles("alice_angles", o.angles.alice);
  angles("bob_angles", o.angles.bob);
  Rng rng(c.seed);
  const qkd::E91Session s = qkd::e91_run(o, rng);
  Json body{{"n", s.n},
            {"protocol", "e91"},
            {"qber", s.qber()},
            {"sift_fraction", s.sift_fraction()},
            {"chsh", qkd::chsh_value(s)},
            {"chsh_sigma", qkd::chsh_standard_error(s)},
            {"anticorrelation", s.anticorrelation},
            {"key_length", s.key_alice.size()},
            {"seed", c.seed}};
  if (c.emit_key) {
    body["key_alice"] = qkd::to_string(s.key_alice);
    body["key_bob"] = qkd::to_string(s.key_bob);
  }
  emit_json(out, c, body);
  return kExitOk;
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d{
      {"purify-curve", "F -> F' map of one purification step (or a trajectory)"},
      {"fixpoint-scan", "fixpoints of the Werner-line map and their stability"},
      {"threshold-search", "apparatus reliability below which purification breaks down"},
      {"demon-binary", "flagged binary recurrence trajectory"},
      {"demon-bell", "flagged 16-coefficient recurrence trajectory"},
      {"demon-mc", "Monte Carlo flagged ensemble"},
      {"regime-map", "purification regime versus factorized noise f0"},
      {"shor-roundtrip", "nine-qubit code on all single-qubit errors"},
      {"qkd-bb84", "BB84 session transcript"},
      {"qkd-e91", "E91 session transcript with CHSH"},
  };
  return d;
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m{
      {"purify-curve", cmd_purify_curve},     {"fixpoint-scan", cmd_fixpoint_scan},
      {"threshold-search", cmd_threshold_search}, {"demon-binary", cmd_demon_binary},
      {"demon-bell", cmd_demon_bell},         {"demon-mc", cmd_demon_mc},
      {"regime-map", cmd_regime_map},         {"shor-roundtrip", cmd_shor_roundtrip},
      {"qkd-bb84", cmd_qkd_bb84},             {"qkd-e91", cmd_qkd_e91},
  };
  return m;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : commands()) n.push_back(name);
    return n;
  }();
  return names;
}

Json header(const ExperimentConfig& c) {
  Json cfg{{"command", c.command}, {"params", c.params}, {"seed", c.seed}, {"workers", c.workers}};
  if (c.emit_key) cfg["emit_key"] = true;
  return {{"version", QCOMM_VERSION}, {"config", cfg}};
}

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  const auto it = commands().find(config.command);
  if (it == commands().end()) {
    err << "unknown command: " << config.command << "\n";
    return kExitConfig;
  }
  try {
    if (config.workers < 1) throw ConfigError("--workers", "must be at least 1");
    if (config.emit_key && config.command.rfind("qkd-", 0) != 0)
      throw ConfigError("--emit-key", "only valid for the qkd commands");
    if (config.out.empty()) return it->second(config, out, err);
    // Render fully before touching the file so failed runs leave nothing behind.
    std::ostringstream buffer;
    const int code = it->second(config, buffer, err);
    std::ofstream file(config.out, std::ios::binary);
    if (!file) throw ConfigError("--out", "cannot open " + config.out);
    file << buffer.str();
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum communication simulator"};
  app.set_version_flag("--version", QCOMM_VERSION);
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string config_path;
  bool seed_given = false;
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, descriptions().at(name));
    sub->add_option("--config", config_path, "JSON parameter file");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { config.seed = s, seed_given = true; }, "RNG seed (default 0)");
    sub->add_option("--out", config.out, "artifact path (default stdout)");
    sub->add_option("--workers", config.workers, "worker threads")->check(CLI::PositiveNumber);
    if (name.rfind("qkd-", 0) == 0) sub->add_flag("--emit-key", config.emit_key, "include keys in the transcript");
    sub->callback([&config, name] { config.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!config_path.empty()) {
      Json j = load_json_file(config_path);
      if (!j.is_object()) throw ConfigError(config_path, "expected a JSON object");
      if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
        if (!seed_given) config.seed = j["seed"].get<std::uint64_t>();
        j.erase("seed");
      }
      config.params = std::move(j);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return run(config, out, err);
}

}  // namespace qcomm::cli
