#pragma once

// JSON loaders for noise specifications:
//   {"f": [[...4x4...]]}          correlated Pauli channel
//                                 ("normalize": true rescales to unit sum)
//   {"f": [[...2x2...]]}          binary spin-flip channel
//   {"f0": x}                     factorized binary channel
//   {"p1": .., "p2": .., "eta": ..} apparatus reliabilities (missing keys = 1)

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qcomm/channels.hpp"

namespace qcomm {

/// Schema violation. field() names the offending key path, e.g. "noise.f[2][1]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

using Json = nlohmann::json;

/// Accepts a 4x4 "f", a 2x2 "f" (embedded as identity / sigma_x) or "f0".
PauliNoiseSpec parse_pauli_noise(const Json& j, const std::string& path = "noise");
/// Accepts a 2x2 "f" or "f0".
BinaryNoiseSpec parse_binary_noise(const Json& j, const std::string& path = "noise");
ApparatusNoise parse_apparatus(const Json& j, const std::string& path = "apparatus");

/// Reads and parses a JSON file; I/O and syntax failures become ConfigError.
Json load_json_file(const std::string& filename);

/// Scalar accessors with field-level diagnostics.
double get_number(const Json& j, const std::string& key, const std::string& path);
double get_number_or(const Json& j, const std::string& key, double fallback, const std::string& path);

}  // namespace qcomm
