#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chiralcp/greens.hpp"
#include "chiralcp/physics.hpp"

namespace chiralcp {

enum class State { ground, excited };

/// alpha(i xi) = (2/3hbar) omega10 |d01|^2 / (omega10^2 + xi^2).
double polarizability(const MoleculeSpec& molecule, double xi);
/// Gamma(i xi) = -(2/3hbar) xi R01 / (omega10^2 + xi^2); odd in R01, zero at xi = 0.
double chiral_response(const MoleculeSpec& molecule, double xi);

struct ComponentParts {
  double nonresonant = 0.0;  // J (or N/m... for derivatives: J/m)
  double resonant = 0.0;
  double total() const { return nonresonant + resonant; }
};

/// U0e, U1e, U0c, U1c at one position. The same layout is reused for d/dz.
struct PotentialComponents {
  ComponentParts U0e, U1e, U0c, U1c;
  double z = 0.0;
  double temperature = 0.0;
  bool thermal = false;

  double electric(State s) const { return s == State::ground ? U0e.total() : U1e.total(); }
  double chiral(State s) const { return s == State::ground ? U0c.total() : U1c.total(); }
  double total(State s) const { return electric(s) + chiral(s); }
  /// p0 U0 + p1 U1.
  double weighted(const Populations& p) const { return p.p0 * total(State::ground) + p.p1 * total(State::excited); }
};

/// Values and analytic z derivatives computed together.
struct PotentialSample {
  PotentialComponents value;
  PotentialComponents dz;
};

struct PotentialOptions {
  /// Unset: single reflection when a > 50 lambda10, otherwise the round-trip series.
  std::optional<greens::Resummation> resummation;
  greens::GreensOptions greens{};
  quad::QuadratureConfig xi_quadrature{1e-9, 0.0, 2000, quad::OscillatoryMethod::filon};
  quad::SeriesConfig matsubara{1e-11, 1, 5'000'000, 3};
  double z_min = 10e-9;  // m
  /// Below this n(omega10) the thermal formulas collapse to the T = 0 ones.
  double thermal_threshold = 1e-30;
  /// Test hook: replaces n(omega10) in the resonant weights.
  std::optional<double> photon_number_override;

  greens::GreensOptions greens_for(const MoleculeSpec& molecule, const CavitySpec& cavity) const;
};

/// Zero-temperature components (all four, both states).
PotentialSample potential_zero_T(const MoleculeSpec& molecule, const CavitySpec& cavity, double z,
                                 const PotentialOptions& opts = {});

/// Thermal components with a Matsubara sum; T > 0.
PotentialSample potential_thermal(const MoleculeSpec& molecule, const CavitySpec& cavity, double z, double T,
                                  const PotentialOptions& opts = {});

/// Chooses zero-T or thermal from T and n(omega10).
PotentialSample potential_components(const MoleculeSpec& molecule, const CavitySpec& cavity, double z, double T,
                                     const PotentialOptions& opts = {});

/// Resonant parts of the excited-state potential at T = 0 (U1e, U1c), which
/// need only the real-frequency traces at omega10.
struct ResonantParts {
  double electric = 0.0;  // J
  double chiral = 0.0;
};
ResonantParts resonant_excited(const MoleculeSpec& molecule, const CavitySpec& cavity, double z,
                               const PotentialOptions& opts = {});

/// Driven potential U_CP = p0 U0 + p1 U1 with cycle-averaged populations.
double driven_potential(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive, double z,
                        const PotentialOptions& opts = {});

/// F = -dU_CP/dz from the analytic derivative kernels.
double force(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive, double z,
             const PotentialOptions& opts = {});

struct CurvePoint {
  double z = 0.0;
  PotentialComponents components;
  double U_driven = 0.0;
  double dU_driven = 0.0;
  std::optional<double> U_driven_mirror;  // opposite enantiomer
};

struct PotentialCurve {
  std::vector<CurvePoint> points;
  Populations populations;
  /// Columns z_m, U0e_J, U1e_J, U0c_J, U1c_J, U_driven_J[, U_driven_mirror_J].
  std::string to_csv() const;
};

/// Evaluates the driven potential on a grid of positions; `workers` threads.
PotentialCurve potential_curve(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive,
                               const std::vector<double>& zs, bool with_mirror_enantiomer = false, int workers = 1,
                               const PotentialOptions& opts = {});

struct BarrierSide {
  bool has_barrier = false;
  double V = 0.0;         // J, relative to U(a/2)
  double position = 0.0;  // m, distance from the mirror
  double threshold_speed = 0.0;
};

struct BarrierReport {
  MirrorSide side = MirrorSide::A;
  BarrierSide positive;  // R01 > 0 enantiomer
  BarrierSide negative;  // R01 < 0 enantiomer
  double V_plus = 0.0;   // larger barrier
  double V_minus = 0.0;  // smaller barrier
  double v_plus = 0.0;   // sqrt(2 V_plus / m)
  double v_minus = 0.0;
  /// Enantiomer that sees V_plus (repelled). Empty when both barriers coincide.
  std::optional<Enantiomer> repelled;
  bool barrierless = false;  // neither enantiomer has a maximum on the approach
};

/// Scans 400 log-spaced points from z_min to a/2 measured from the chosen
/// mirror, then refines the maximum by golden-section search.
BarrierReport barrier_report(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive,
                             MirrorSide side, const PotentialOptions& opts = {}, int workers = 1);

std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace chiralcp
