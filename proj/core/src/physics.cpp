#include "chiralcp/physics.hpp"

#include <cmath>

#include "chiralcp/errors.hpp"

namespace chiralcp {

namespace {

constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

void require(bool ok, const std::string& message) {
  if (!ok) throw DomainError(message);
}

}  // namespace

void MoleculeSpec::validate() const {
  require(std::isfinite(dipole_d01) && dipole_d01 >= 0.0, "molecule.dipole_d01 must be >= 0");
  require(std::isfinite(rotatory_R01_over_c), "molecule.rotatory_R01_over_c must be finite");
  require(std::isfinite(omega10) && omega10 > 0.0, "molecule.omega10 must be > 0");
  require(std::isfinite(mass) && mass > 0.0, "molecule.mass must be > 0");
}

MoleculeSpec MoleculeSpec::mirror_image() const {
  MoleculeSpec m = *this;
  m.rotatory_R01_over_c = -rotatory_R01_over_c;
  return m;
}

MoleculeSpec molecule_preset(std::string_view name, Enantiomer enantiomer) {
  const double s = sign_of(enantiomer);
  if (name == "3MCP-eq") {
    // S0 -> S1 transition of 3-methylcyclopentanone, equatorial conformer.
    return MoleculeSpec{"3MCP-eq", 2.44e-31, s * 8.07e-63, 6.44e15, 1.63e-25};
  }
  if (name == "propylene-oxide") {
    // Vibrational transition; mass from the molar mass 58.08 g/mol.
    return MoleculeSpec{"propylene-oxide", 8.82e-32, s * 3.89e-67, 3.8e13,
                        58.08 * kAtomicMassUnit};
  }
  throw DomainError("unknown molecule preset '" + std::string(name) + "'");
}

std::vector<std::string> molecule_preset_names() { return {"3MCP-eq", "propylene-oxide"}; }

void MirrorSpec::validate() const {
  require(std::isfinite(r_e) && r_e >= 0.0 && r_e <= 1.0, "mirror r_e must lie in [0, 1]");
  require(std::isfinite(r_c) && r_c >= -1.0 && r_c <= 1.0, "mirror r_c must lie in [-1, 1]");
  require(r_e * r_e + r_c * r_c <= 1.0 + 1e-12, "mirror violates passivity: r_e^2 + r_c^2 > 1");
}

CavitySpec CavitySpec::symmetric(double width, double r_e, double r_c) {
  return CavitySpec{width, MirrorSpec{r_e, r_c, MirrorSide::A}, MirrorSpec{r_e, r_c, MirrorSide::B}};
}

void CavitySpec::validate() const {
  require(std::isfinite(width_a) && width_a > 0.0, "cavity.width_a must be > 0");
  require(mirror_a.side == MirrorSide::A, "cavity.mirror_a must be on side A");
  require(mirror_b.side == MirrorSide::B, "cavity.mirror_b must be on side B");
  mirror_a.validate();
  mirror_b.validate();
}

void CavitySpec::check_position(double z) const {
  if (!(z > 0.0 && z < width_a)) {
    throw DomainError("molecule position z must satisfy 0 < z < a");
  }
}

CavitySpec CavitySpec::chirality_flipped() const {
  CavitySpec out = *this;
  out.mirror_a.r_c = -mirror_a.r_c;
  out.mirror_b.r_c = -mirror_b.r_c;
  return out;
}

DriveSpec DriveSpec::undriven(double temperature) {
  DriveSpec d;
  d.rabi_omega = 0.0;
  d.temperature = temperature;
  return d;
}

void DriveSpec::validate() const {
  require(intensity.has_value() != rabi_omega.has_value(),
          "drive: exactly one of intensity / rabi_omega must be given");
  if (intensity) require(std::isfinite(*intensity) && *intensity >= 0.0, "drive.intensity must be >= 0");
  if (rabi_omega) require(std::isfinite(*rabi_omega) && *rabi_omega >= 0.0, "drive.rabi_omega must be >= 0");
  require(std::isfinite(detuning_delta), "drive.detuning must be finite");
  require(std::isfinite(temperature) && temperature >= 0.0, "drive.temperature must be >= 0");
}

double DriveSpec::rabi_frequency(const MoleculeSpec& molecule) const {
  validate();
  if (rabi_omega) return *rabi_omega;
  if (*intensity == 0.0) return 0.0;
  return rabi_from_intensity(molecule.dipole_d01, *intensity);
}

double rabi_from_intensity(double d01, double intensity) {
  require(d01 >= 0.0, "rabi_from_intensity: d01 must be >= 0");
  require(intensity >= 0.0, "rabi_from_intensity: intensity must be >= 0");
  // SI -> Gaussian: 1 C = 10 c statC, 1 m = 100 cm, 1 W/m^2 = 1e3 erg/(s cm^2).
  const double c_si = PhysicalConstants::c;
  const double d_cgs = d01 * (10.0 * c_si) * 100.0;
  const double intensity_cgs = intensity * 1e3;
  const double c_cgs = c_si * 100.0;
  const double hbar_cgs = PhysicalConstants::hbar * 1e7;
  return 2.0 * d_cgs * std::sqrt(2.0 * kPi * intensity_cgs / c_cgs) / hbar_cgs;
}

Populations populations(double omega_rabi, double detuning, double t) {
  const double w2 = omega_rabi * omega_rabi;
  const double gen2 = detuning * detuning + w2;
  if (gen2 == 0.0) return {1.0, 0.0};
  const double s = std::sin(0.5 * std::sqrt(gen2) * t);
  const double p1 = w2 / gen2 * s * s;
  return {1.0 - p1, p1};
}

Populations time_averaged_populations(double omega_rabi, double detuning) {
  const double w2 = omega_rabi * omega_rabi;
  const double gen2 = detuning * detuning + w2;
  if (gen2 == 0.0) return {1.0, 0.0};
  const double p1 = 0.5 * w2 / gen2;
  return {1.0 - p1, p1};
}

double thermal_photon_number(double omega, double temperature) {
  require(std::isfinite(omega) && omega > 0.0, "thermal_photon_number: omega must be > 0");
  require(temperature >= 0.0, "thermal_photon_number: temperature must be >= 0");
  if (temperature == 0.0) return 0.0;
  const double x = PhysicalConstants::hbar * omega / (PhysicalConstants::kB * temperature);
  return 1.0 / std::expm1(x);
}

}  // namespace chiralcp
