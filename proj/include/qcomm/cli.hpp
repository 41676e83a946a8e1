#pragma once

// Experiment driver behind the qcomm executable. Each command reads an
// optional JSON parameter object and writes one CSV or JSON artifact.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qcomm/noise_json.hpp"

namespace qcomm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct ExperimentConfig {
  std::string command;
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::string out;  // empty: artifact goes to the stdout stream
  int workers = 1;
  bool emit_key = false;
};

const std::vector<std::string>& command_names();

/// Runs one command. Diagnostics go to `err`; the artifact goes to `out`
/// unless config.out names a file. Returns one of the kExit codes.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Parses the command line (subcommand, --config, --seed, --out, --workers,
/// --emit-key) and dispatches to run().
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

/// Header lines every artifact starts with; also embedded as "_header" in
/// JSON artifacts.
Json header(const ExperimentConfig& config);

}  // namespace qcomm::cli
