#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chiralcp {

// CODATA 2018 values, SI.
struct PhysicalConstants {
  static constexpr double hbar = 1.054571817e-34;    // J s
  static constexpr double mu0 = 1.25663706212e-6;    // N / A^2
  static constexpr double c = 299792458.0;           // m / s
  static constexpr double kB = 1.380649e-23;         // J / K
  static constexpr double eps0 = 1.0 / (mu0 * c * c);  // F / m
};

inline constexpr double kPi = 3.14159265358979323846;

enum class Enantiomer { positive, negative };

constexpr double sign_of(Enantiomer e) { return e == Enantiomer::positive ? 1.0 : -1.0; }
constexpr Enantiomer opposite(Enantiomer e) {
  return e == Enantiomer::positive ? Enantiomer::negative : Enantiomer::positive;
}

/// Two-level chiral molecule. The sign of the rotatory strength encodes handedness.
struct MoleculeSpec {
  std::string name;
  double dipole_d01 = 0.0;           // |d01|, C m
  double rotatory_R01_over_c = 0.0;  // R01 / c, C^2 m^2 (signed)
  double omega10 = 0.0;              // rad / s
  double mass = 0.0;                 // kg

  void validate() const;

  double rotatory_R01() const { return rotatory_R01_over_c * PhysicalConstants::c; }
  double wavelength() const { return 2.0 * kPi * PhysicalConstants::c / omega10; }
  double wavenumber() const { return omega10 / PhysicalConstants::c; }

  /// Same molecule with R01 -> -R01.
  MoleculeSpec mirror_image() const;
};

/// Built-in molecule presets: "3MCP-eq" and "propylene-oxide".
MoleculeSpec molecule_preset(std::string_view name, Enantiomer enantiomer = Enantiomer::positive);
std::vector<std::string> molecule_preset_names();

enum class MirrorSide { A, B };

/// Constant (frequency- and angle-independent) mirror reflection coefficients.
/// Side A sits at z = 0, side B at z = a; the same (r_e, r_c) pair yields
/// mirrors of opposite chirality on the two sides.
struct MirrorSpec {
  double r_e = 0.0;
  double r_c = 0.0;
  MirrorSide side = MirrorSide::A;

  void validate() const;
};

struct CavitySpec {
  double width_a = 0.0;  // m
  MirrorSpec mirror_a{0.0, 0.0, MirrorSide::A};
  MirrorSpec mirror_b{0.0, 0.0, MirrorSide::B};

  /// Both mirrors share (r_e, r_c); with the side-dependent matrix forms this
  /// is the opposite-chirality cavity.
  static CavitySpec symmetric(double width, double r_e, double r_c);

  void validate() const;
  /// Throws DomainError unless 0 < z < a.
  void check_position(double z) const;
  /// Mirror-swapped cavity: r_c -> -r_c on both mirrors.
  CavitySpec chirality_flipped() const;
};

/// Laser drive. Exactly one of intensity / rabi_omega is the source of truth.
struct DriveSpec {
  std::optional<double> intensity;   // W / m^2
  std::optional<double> rabi_omega;  // rad / s
  double detuning_delta = 0.0;       // rad / s, omega_L - omega10
  double temperature = 0.0;          // K

  static DriveSpec undriven(double temperature = 0.0);
  void validate() const;
  /// Rabi frequency for the given molecule (derived from the intensity if needed).
  double rabi_frequency(const MoleculeSpec& molecule) const;
};

// ---------------------------------------------------------------------------
// Operations

/// Omega = 2|d01| (2 pi I / c)^{1/2} / hbar, evaluated in Gaussian units.
/// Takes SI inputs (C m, W/m^2) and returns rad/s.
double rabi_from_intensity(double d01, double intensity);

struct Populations {
  double p0 = 1.0;
  double p1 = 0.0;
};

/// Instantaneous Rabi populations of a two-level system starting in the ground state.
Populations populations(double omega_rabi, double detuning, double t);

/// Cycle-averaged populations. Omega = Delta = 0 gives the undriven (1, 0).
Populations time_averaged_populations(double omega_rabi, double detuning);

/// Bose-Einstein occupation 1 / (exp(hbar omega / kB T) - 1); zero at T = 0.
double thermal_photon_number(double omega, double temperature);

}  // namespace chiralcp
