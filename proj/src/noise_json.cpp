#include "qcomm/noise_json.hpp"

#include <fstream>
#include <vector>

namespace qcomm {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::vector<std::vector<double>> read_square(const Json& f, const std::string& path) {
  if (!f.is_array() || f.empty()) throw ConfigError(path, "expected a square array of numbers");
  const std::size_t n = f.size();
  std::vector<std::vector<double>> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!f[r].is_array() || f[r].size() != n)
      throw ConfigError(row_path, "expected " + std::to_string(n) + " entries");
    for (std::size_t c = 0; c < n; ++c) {
      const Json& x = f[r][c];
      if (!x.is_number()) throw ConfigError(row_path + "[" + std::to_string(c) + "]", "expected a number");
      out[r].push_back(x.get<double>());
    }
  }
  return out;
}

template <typename Spec, std::size_t N>
Spec build(const std::vector<std::vector<double>>& rows, const std::string& path) {
  typename Spec::Table t{};
  for (std::size_t r = 0; r < N; ++r)
    for (std::size_t c = 0; c < N; ++c) t[r][c] = rows[r][c];
  try {
    return Spec(t);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

BinaryNoiseSpec binary_from_f0(const Json& j, const std::string& path) {
  const double f0 = get_number(j, "f0", path);
  if (!(f0 >= 0 && f0 <= 1)) throw ConfigError(join(path, "f0"), "must lie in [0, 1]");
  return BinaryNoiseSpec::factorized(f0);
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

}  // namespace

double get_number(const Json& j, const std::string& key, const std::string& path) {
  require_object(j, path);
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "missing required number");
  if (!it->is_number()) throw ConfigError(join(path, key), "expected a number");
  return it->get<double>();
}

double get_number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  require_object(j, path);
  return j.contains(key) ? get_number(j, key, path) : fallback;
}

PauliNoiseSpec parse_pauli_noise(const Json& j, const std::string& path) {
  require_object(j, path);
  if (j.contains("f")) {
    const auto rows = read_square(j["f"], join(path, "f"));
    if (rows.size() == 4) {
      if (j.value("normalize", false)) {
        PauliNoiseSpec::Table t{};
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) t[r][c] = rows[r][c];
        try {
          return PauliNoiseSpec::normalized(t);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(join(path, "f"), e.what());
        }
      }
      return build<PauliNoiseSpec, 4>(rows, join(path, "f"));
    }
    if (rows.size() == 2) return build<BinaryNoiseSpec, 2>(rows, join(path, "f")).to_pauli();
    throw ConfigError(join(path, "f"), "expected a 4x4 or 2x2 table");
  }
  if (j.contains("f0")) return binary_from_f0(j, path).to_pauli();
  throw ConfigError(path, "expected key \"f\" or \"f0\"");
}

BinaryNoiseSpec parse_binary_noise(const Json& j, const std::string& path) {
  require_object(j, path);
  if (j.contains("f")) {
    const auto rows = read_square(j["f"], join(path, "f"));
    if (rows.size() != 2) throw ConfigError(join(path, "f"), "expected a 2x2 table");
    return build<BinaryNoiseSpec, 2>(rows, join(path, "f"));
  }
  if (j.contains("f0")) return binary_from_f0(j, path);
  throw ConfigError(path, "expected key \"f\" or \"f0\"");
}

ApparatusNoise parse_apparatus(const Json& j, const std::string& path) {
  ApparatusNoise a;
  a.p1 = get_number_or(j, "p1", 1.0, path);
  a.p2 = get_number_or(j, "p2", 1.0, path);
  a.eta = get_number_or(j, "eta", 1.0, path);
  if (!(a.p1 >= 0 && a.p1 <= 1)) throw ConfigError(join(path, "p1"), "must lie in [0, 1]");
  if (!(a.p2 >= 0 && a.p2 <= 1)) throw ConfigError(join(path, "p2"), "must lie in [0, 1]");
  if (!(a.eta >= 0.5 && a.eta <= 1)) throw ConfigError(join(path, "eta"), "must lie in [1/2, 1]");
  return a;
}

Json load_json_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError(filename, "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(filename, e.what());
  }
}

}  // namespace qcomm
