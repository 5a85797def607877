#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "chiralcp/dynamics.hpp"
#include "chiralcp/potential.hpp"
#include "chiralcp_cli/config.hpp"

namespace chiralcp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunOptions {
  std::string out_dir = "out";
  int workers = 1;
  std::optional<std::uint64_t> seed;  // replaces ensemble.seed
};

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

/// Everything a command produces; written to disk by run_command.
struct CommandResult {
  std::vector<OutputFile> files;
  std::string summary;  // JSON, also one of `files`
};

CommandResult cmd_potential(const ScenarioConfig& config, int workers);
CommandResult cmd_enhancement(const ScenarioConfig& config, int workers);
CommandResult cmd_ensemble(const ScenarioConfig& config, int workers);
CommandResult cmd_barrier(const ScenarioConfig& config, int workers);

struct EnhancementRow {
  int nu = 0;
  double width = 0.0;            // m
  double chiral_amplitude = 0.0;  // J, max |U1c,res| over [lambda/4, a - lambda/4]
  double electric_amplitude = 0.0;
  double chiral_at_center = 0.0;  // J, signed value at z = a/2
  double electric_at_center = 0.0;
};

/// Per-nu amplitudes of the resonant excited-state components; the cavity
/// width from the config is replaced by nu lambda/4.
std::vector<EnhancementRow> enhancement_table(const ScenarioConfig& config, int workers);

struct EnsemblePair {
  dynamics::EnsembleResult positive;
  dynamics::EnsembleResult negative;
  dynamics::SeparationSummary separation;
};

EnsemblePair ensemble_pair(const ScenarioConfig& config, int workers, bool keep_history);

/// Process exit status for an exception escaping a command; also prints the
/// diagnostic line to stderr.
int exit_code_for(const std::exception& e);

/// Applies --seed, validates, runs `command`, then writes config.json, the
/// command outputs and manifest.json into opts.out_dir.
CommandResult run_command(const std::string& command, ScenarioConfig config, const RunOptions& opts);

}  // namespace chiralcp::cli
