#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chiralcp/physics.hpp"
#include "chiralcp/potential.hpp"

namespace chiralcp::dynamics {

enum class Fate { in_flight, collected_A, collected_B };

const char* to_string(Fate f);

struct TrajectoryState {
  double z = 0.0;    // m
  double v_z = 0.0;  // m/s
  double t = 0.0;    // s
  Fate fate = Fate::in_flight;
};

/// Potential on a fixed grid with cubic Hermite interpolation through U and
/// dU/dz. The force is the exact derivative of the interpolant, so E = mv^2/2 + U
/// is conserved by the continuous dynamics. [z_lo, z_hi] are the collection planes.
class ForceField {
 public:
  /// Grid ends are the collection planes; mirror_lo / mirror_hi are the mirror
  /// surfaces used for step-size control.
  ForceField(std::vector<double> z, std::vector<double> U, std::vector<double> dU, double mirror_lo,
             double mirror_hi);

  /// Samples the driven potential of `molecule` on hybrid_grid(n_points).
  static ForceField build(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive,
                          const PotentialOptions& opts = {}, int n_points = 4000, int workers = 1);
  /// Samples an arbitrary potential given as z -> (U, dU/dz).
  static ForceField from_function(const std::function<std::pair<double, double>(double)>& U_dU,
                                  const std::vector<double>& grid, double mirror_lo, double mirror_hi);

  double potential(double z) const;
  double force(double z) const;
  double z_lo() const { return z_.front(); }
  double z_hi() const { return z_.back(); }
  double mirror_lo() const { return mirror_lo_; }
  double mirror_hi() const { return mirror_hi_; }
  const std::vector<double>& grid() const { return z_; }
  /// Interpolation cell containing z. A point within 1e-6 of a cell width from
  /// a node belongs to the cell on the `direction` side of it.
  std::pair<double, double> cell(double z, double direction) const;

 private:
  std::size_t segment(double z) const;
  std::vector<double> z_, U_, dU_;
  double mirror_lo_ = 0.0, mirror_hi_ = 0.0;
};

/// n points on [z_min, a - z_min]: log-spaced within `near` of each mirror,
/// uniform in between.
std::vector<double> hybrid_grid(double a, double z_min, double near, int n);

struct IntegratorControls {
  double rel_tol = 1e-9;
  double abs_tol_z = 1e-16;  // m
  double abs_tol_v = 1e-13;  // m/s
  double initial_step = 1e-6;
  double min_step = 1e-16;
  /// Step limit h <= fraction * (distance to the nearer mirror) / |v|.
  double distance_fraction = 0.2;
  long max_steps = 20'000'000;
  bool record_history = true;
};

struct Trajectory {
  std::vector<TrajectoryState> history;  // accepted steps, including the initial and final states
  TrajectoryState final_state;
  long steps = 0;
  long rejected = 0;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// Dormand-Prince 5(4) for m dv/dt = F(z), dz/dt = v. Ends at t_max or when z
/// crosses a collection plane (the crossing time is located on the step's
/// cubic Hermite interpolant).
Trajectory integrate_trajectory(const TrajectoryState& init, const ForceField& field, double mass, double t_max,
                                const IntegratorControls& controls = {});

struct EnsembleSpec {
  int n_molecules = 500;
  double z0 = 0.0;      // m
  double v_mean = 0.0;  // m/s
  double v_sigma = 0.0;
  std::uint64_t rng_seed = 1;
  double t_max = 1.0;  // s
  Enantiomer enantiomer = Enantiomer::positive;
  /// When non-empty these replace the Gaussian draw; size must equal n_molecules.
  std::vector<double> initial_velocities;

  void validate() const;
};

struct TrajectoryRecord {
  std::size_t id = 0;
  double v0 = 0.0;
  TrajectoryState final_state;
  std::optional<std::string> error;  // integration failure; final_state is the last good state
  std::vector<TrajectoryState> history;
};

struct SeparationStats {
  EnsembleSpec spec;
  double fraction_A = 0.0;
  double fraction_B = 0.0;
  double fraction_in_flight = 0.0;  // includes failed trajectories
  int n_A = 0, n_B = 0, n_in_flight = 0, n_failed = 0;
  /// Mirror where this enantiomer meets the low barrier; unset for achiral mirrors.
  std::optional<MirrorSide> designated;
  std::optional<double> side_purity;  // collected at designated / collected
  std::optional<double> median_collection_time;
  double collected_fraction() const { return fraction_A + fraction_B; }
};

struct EnsembleResult {
  SeparationStats stats;
  std::vector<TrajectoryRecord> records;
  /// Columns traj_id, t_s, z_m, vz_m_per_s, fate.
  std::string trajectories_csv() const;
};

/// Mirror at which the enantiomer with rotatory strength sign `r_sign` is collected.
std::optional<MirrorSide> designated_mirror(const CavitySpec& cavity, double r_sign);

/// Runs the ensemble on a prebuilt field (which must belong to spec.enantiomer).
EnsembleResult run_ensemble(const EnsembleSpec& spec, const ForceField& field, double mass, const CavitySpec& cavity,
                            int workers = 1, bool keep_history = false, const IntegratorControls& controls = {});

/// Builds the field for spec.enantiomer of `molecule` and runs the ensemble.
EnsembleResult run_ensemble(const EnsembleSpec& spec, const CavitySpec& cavity, const MoleculeSpec& molecule,
                            const DriveSpec& drive, int workers = 1, bool keep_history = false,
                            const PotentialOptions& opts = {});

struct MirrorExcess {
  std::optional<double> excess;  // unset: nothing collected at this mirror
  int n_correct = 0;
  int n_wrong = 0;
};

struct SeparationSummary {
  MirrorExcess mirror_A;
  MirrorExcess mirror_B;
};

/// Per-mirror enantiomeric excess (n_correct - n_wrong) / (n_correct + n_wrong).
/// Throws ValidationError unless the runs differ only in enantiomer.
SeparationSummary separation_report(const SeparationStats& run_pos, const SeparationStats& run_neg);

}  // namespace chiralcp::dynamics
