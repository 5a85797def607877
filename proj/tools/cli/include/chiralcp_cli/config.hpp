#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chiralcp/dynamics.hpp"
#include "chiralcp/physics.hpp"
#include "chiralcp/potential.hpp"

namespace chiralcp::cli {

/// Bad configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MoleculeBlock {
  std::optional<std::string> preset;  // "3MCP-eq" or "propylene-oxide"
  Enantiomer enantiomer = Enantiomer::positive;
  // Explicit spec, used when no preset is named.
  std::string name;
  double dipole_d01 = 0.0;
  double rotatory_R01_over_c = 0.0;
  double omega10 = 0.0;
  double mass = 0.0;

  bool operator==(const MoleculeBlock&) const = default;
};

struct MirrorBlock {
  double r_e = 0.0;
  double r_c = 0.0;
  bool operator==(const MirrorBlock&) const = default;
};

struct CavityBlock {
  double width = 0.0;  // m
  MirrorBlock mirror_a, mirror_b;
  bool operator==(const CavityBlock&) const = default;
};

struct DriveBlock {
  std::optional<double> intensity;   // W/m^2
  std::optional<double> rabi_omega;  // rad/s
  double detuning = 0.0;             // rad/s
  double temperature = 0.0;          // K
  bool operator==(const DriveBlock&) const = default;
};

struct NumericsBlock {
  std::string resummation = "auto";  // auto | single_reflection | full_series | full_direct
  double z_min = 10e-9;
  double xi_rel_tol = 1e-9;
  double greens_rel_tol = 1e-8;
  double matsubara_rel_tol = 1e-11;
  bool operator==(const NumericsBlock&) const = default;
};

struct ZGrid {
  std::string spacing = "log";  // log | linear
  double min = 10e-9;
  double max = 0.5e-3;
  int count = 200;
  std::vector<double> values;  // overrides spacing/min/max/count when non-empty

  std::vector<double> resolve() const;
  bool operator==(const ZGrid&) const = default;
};

struct PotentialBlock {
  ZGrid z_grid;
  std::vector<double> temperatures;      // one curve per entry; empty: drive.temperature
  std::vector<MirrorBlock> mirror_sets;  // one curve per (r_e, r_c) applied to both mirrors
  bool both_enantiomers = false;
  bool barrier = false;  // add barrier reports to the summary
  bool operator==(const PotentialBlock&) const = default;
};

struct EnhancementBlock {
  int nu_min = 2;
  int nu_max = 12;
  int samples = 400;  // scan points over the interior window
  bool operator==(const EnhancementBlock&) const = default;
};

struct EnsembleBlock {
  int n_molecules = 500;
  double z0 = 0.5e-3;
  double v_mean = 0.0;
  double v_sigma = 0.0;
  std::uint64_t seed = 1;
  double t_max = 1.0;
  std::vector<double> initial_velocities;  // replaces the Gaussian draw when set
  int grid_points = 4000;
  bool write_trajectories = false;
  bool operator==(const EnsembleBlock&) const = default;
};

struct BarrierBlock {
  std::string side = "both";  // A | B | both
  bool operator==(const BarrierBlock&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::string command;  // suggested subcommand, informational
  MoleculeBlock molecule;
  CavityBlock cavity;
  DriveBlock drive;
  NumericsBlock numerics;
  std::optional<PotentialBlock> potential;
  std::optional<EnhancementBlock> enhancement;
  std::optional<EnsembleBlock> ensemble;
  std::optional<BarrierBlock> barrier;

  bool operator==(const ScenarioConfig&) const = default;

  MoleculeSpec molecule_spec() const;
  CavitySpec cavity_spec() const;
  DriveSpec drive_spec() const;
  PotentialOptions potential_options() const;
  dynamics::EnsembleSpec ensemble_spec(Enantiomer e) const;

  /// Checks every module precondition; throws ConfigError.
  void validate() const;
};

/// Parses JSON text. Unknown keys and wrong types raise ConfigError.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
/// Canonical JSON (sorted keys, all fields present); parse_config(to_json(c)) == c.
std::string to_json(const ScenarioConfig& config);

struct PresetInfo {
  std::string name;
  std::string description;
  std::string command;
};

std::vector<PresetInfo> list_presets();
/// Raw JSON of a shipped preset; ConfigError if unknown.
const std::string& preset_text(const std::string& name);
ScenarioConfig load_preset(const std::string& name);

}  // namespace chiralcp::cli
