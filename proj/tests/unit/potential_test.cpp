#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "chiralcp/potential.hpp"

using namespace chiralcp;

namespace {

const MoleculeSpec kMcp = molecule_preset("3MCP-eq");
const MoleculeSpec kPo = molecule_preset("propylene-oxide");
const double kLambda = kMcp.wavelength();

CavitySpec single_mirror(double a, double re, double rc) {
  CavitySpec c;
  c.width_a = a;
  c.mirror_a = {re, rc, MirrorSide::A};
  c.mirror_b = {0.0, 0.0, MirrorSide::B};
  return c;
}

DriveSpec reference_drive() {
  DriveSpec d;
  d.intensity = 5e4;
  d.detuning_delta = 2.0 * kPi * 1e5;
  return d;
}

double all_components(const PotentialComponents& c) {
  return std::abs(c.U0e.total()) + std::abs(c.U1e.total()) + std::abs(c.U0c.total()) + std::abs(c.U1c.total());
}

// Least-squares slope of log|y| against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(Response, PolarizabilityAndChiralResponse) {
  const double w = kMcp.omega10;
  const double a0 = 2.0 / (3.0 * PhysicalConstants::hbar) * kMcp.dipole_d01 * kMcp.dipole_d01 / w;
  EXPECT_NEAR(polarizability(kMcp, 0.0), a0, 1e-12 * a0);
  EXPECT_NEAR(polarizability(kMcp, w), 0.5 * a0, 1e-12 * a0);
  EXPECT_EQ(chiral_response(kMcp, 0.0), 0.0);
  EXPECT_EQ(chiral_response(kMcp, w), -chiral_response(kMcp.mirror_image(), w));
  EXPECT_LT(chiral_response(kMcp, w), 0.0);
}

TEST(Potential, ZeroMirrorsGiveZero) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.0, 0.0);
  for (double z : {1e-8, 1e-6, 3e-4}) {
    EXPECT_EQ(all_components(potential_zero_T(kMcp, cav, z).value), 0.0);
  }
}

TEST(Potential, ChiralPartsAntisymmetricInRotatoryStrength) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  for (double z : {3e-8, 4e-7, 2.5e-4}) {
    const auto p = potential_zero_T(kMcp, cav, z).value;
    const auto m = potential_zero_T(kMcp.mirror_image(), cav, z).value;
    EXPECT_EQ(p.U0c.total(), -m.U0c.total());
    EXPECT_EQ(p.U1c.total(), -m.U1c.total());
    EXPECT_EQ(p.U0e.total(), m.U0e.total());
    EXPECT_EQ(p.U1e.total(), m.U1e.total());
  }
}

TEST(Potential, NonresonantPartsCancelBetweenStates) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  const auto s = potential_zero_T(kMcp, cav, 2e-7);
  EXPECT_EQ(s.value.U1e.nonresonant, -s.value.U0e.nonresonant);
  EXPECT_EQ(s.value.U1c.nonresonant, -s.value.U0c.nonresonant);
  EXPECT_EQ(s.value.U0e.resonant, 0.0);
  EXPECT_EQ(s.value.U0c.resonant, 0.0);
  const auto t = potential_thermal(kPo, cav, 2e-5, 298.0);
  EXPECT_EQ(t.value.U1e.nonresonant, -t.value.U0e.nonresonant);
  EXPECT_EQ(t.value.U1c.nonresonant, -t.value.U0c.nonresonant);
}

TEST(Potential, MirrorSwapSymmetry) {
  const double a = 20 * kLambda;
  const auto cav = CavitySpec::symmetric(a, 0.05, 0.8);
  const auto flipped = cav.chirality_flipped();
  const auto drive = reference_drive();
  for (double z : {0.3 * kLambda, 2.2 * kLambda, 7.9 * kLambda}) {
    const double u = driven_potential(kMcp, cav, drive, z);
    const double v = driven_potential(kMcp, flipped, drive, a - z);
    EXPECT_NEAR(u, v, 1e-7 * std::abs(u)) << z;
  }
}

TEST(Potential, NearFieldSlopeOfAchiralMirror) {
  const auto cav = single_mirror(1e-3, 0.05, 0.0);
  const auto zs = log_grid(kLambda / 1000.0, kLambda / 50.0, 30);
  std::vector<double> u;
  for (double z : zs) u.push_back(potential_zero_T(kMcp, cav, z).value.U0e.total());
  EXPECT_NEAR(loglog_slope(zs, u), -3.0, 0.05);
}

TEST(Potential, GroundStateAttractedByAchiralMirror) {
  const auto cav = single_mirror(1e-3, 0.5, 0.0);
  for (double z : {1e-8, 1e-7, 1e-6}) {
    const auto s = potential_zero_T(kMcp, cav, z);
    EXPECT_LT(s.value.U0e.total(), 0.0);
    EXPECT_GT(s.dz.U0e.total(), 0.0);  // force -dU/dz points to the mirror
    EXPECT_EQ(s.value.U0c.total(), 0.0);
  }
}

TEST(Potential, SingleReflectionIsLinearInCoefficients) {
  PotentialOptions opts;
  opts.resummation = greens::Resummation::single_reflection;
  const double z = 5e-8;
  const auto base = potential_zero_T(kMcp, single_mirror(1e-3, 0.1, 0.2), z, opts).value;
  const auto twice = potential_zero_T(kMcp, single_mirror(1e-3, 0.2, 0.4), z, opts).value;
  EXPECT_NEAR(twice.U0e.total(), 2.0 * base.U0e.total(), 1e-8 * std::abs(base.U0e.total()));
  EXPECT_NEAR(twice.U0c.total(), 2.0 * base.U0c.total(), 1e-8 * std::abs(base.U0c.total()));
  EXPECT_NEAR(twice.U1c.total(), 2.0 * base.U1c.total(), 1e-8 * std::abs(base.U1c.total()));
}

TEST(Potential, ResonantPartOscillatesWithHalfWavelengthPeriod) {
  const auto cav = single_mirror(200 * kLambda, 0.5, 0.0);
  std::vector<double> zeros;
  const int n = 1200;
  double z_prev = 2 * kLambda, u_prev = resonant_excited(kMcp, cav, z_prev).electric;
  for (int i = 1; i <= n; ++i) {
    const double z = 2 * kLambda + 6 * kLambda * i / n;
    const double u = resonant_excited(kMcp, cav, z).electric;
    if ((u > 0) != (u_prev > 0)) zeros.push_back(z_prev + (z - z_prev) * u_prev / (u_prev - u));
    z_prev = z;
    u_prev = u;
  }
  ASSERT_GE(zeros.size(), 10u);
  const double spacing = (zeros.back() - zeros.front()) / (zeros.size() - 1);
  EXPECT_NEAR(2.0 * spacing, kLambda / 2.0, 0.01 * kLambda / 2.0);
}

TEST(Potential, DriveLimits) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  const double z = 4e-7;
  const auto s = potential_zero_T(kMcp, cav, z).value;

  EXPECT_NEAR(driven_potential(kMcp, cav, DriveSpec::undriven(), z), s.total(State::ground), 1e-15 * std::abs(s.total(State::ground)));

  DriveSpec resonant;
  resonant.rabi_omega = 1e7;
  const double half_res = 0.5 * (s.U1e.resonant + s.U1c.resonant);
  EXPECT_NEAR(driven_potential(kMcp, cav, resonant, z), half_res, 1e-12 * std::abs(half_res));
}

TEST(Potential, PhotonNumberOverrideControlsGroundResonance) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  PotentialOptions opts;
  opts.photon_number_override = 0.0;
  const auto s = potential_thermal(kPo, cav, 3e-5, 298.0, opts).value;
  EXPECT_EQ(s.U0e.resonant, 0.0);
  EXPECT_EQ(s.U0c.resonant, 0.0);

  opts.photon_number_override = 2.0;
  const auto t = potential_thermal(kPo, cav, 3e-5, 298.0, opts).value;
  EXPECT_NEAR(t.U0e.resonant, -2.0 / 3.0 * t.U1e.resonant, 1e-14 * std::abs(t.U1e.resonant));
}

TEST(Potential, ThermalApproachesZeroTemperature) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  const double z = 1e-7;
  const auto cold = potential_zero_T(kMcp, cav, z).value;
  for (double T : {0.1, 1.0}) {
    const auto warm = potential_thermal(kMcp, cav, z, T).value;
    for (State st : {State::ground, State::excited}) {
      EXPECT_NEAR(warm.electric(st), cold.electric(st), 1e-4 * std::abs(cold.electric(st))) << T;
      EXPECT_NEAR(warm.chiral(st), cold.chiral(st), 1e-4 * std::abs(cold.chiral(st))) << T;
    }
  }
}

TEST(Potential, DispatchUsesZeroTemperatureForNegligibleOccupation) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  const auto s = potential_components(kMcp, cav, 1e-7, 298.0);
  EXPECT_FALSE(s.value.thermal);
  EXPECT_EQ(s.value.U0e.total(), potential_zero_T(kMcp, cav, 1e-7).value.U0e.total());
  EXPECT_TRUE(potential_components(kPo, cav, 1e-5, 298.0).value.thermal);
}

TEST(Potential, PropyleneOxideGrowsWithTemperature) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  const double lam = kPo.wavelength();
  for (double z : {lam / 4, lam / 2}) {
    double u0_prev = 0.0, u1_prev = 0.0;
    for (double T : {100.0, 200.0, 298.0, 400.0, 600.0}) {
      const auto s = potential_components(kPo, cav, z, T).value;
      const double u0 = std::abs(s.total(State::ground)), u1 = std::abs(s.total(State::excited));
      EXPECT_GT(u0, u0_prev) << z << " " << T;
      EXPECT_GT(u1, u1_prev) << z << " " << T;
      u0_prev = u0;
      u1_prev = u1;
    }
  }
}

TEST(Force, MatchesFiniteDifferenceOfPotential) {
  const double a = 1e-3;
  const auto cav = CavitySpec::symmetric(a, 0.05, 0.8);
  const auto drive = reference_drive();
  const auto zs = log_grid(2e-8, a - 2e-8, 20);
  for (double z : zs) {
    const double h = 1e-5 * std::min(z, a - z);
    auto U = [&](double x) { return driven_potential(kMcp, cav, drive, x); };
    const double fd = -(-U(z + 2 * h) + 8 * U(z + h) - 8 * U(z - h) + U(z - 2 * h)) / (12 * h);
    const double f = force(kMcp, cav, drive, z);
    EXPECT_NEAR(f, fd, 1e-4 * std::abs(f)) << z;
  }
}

TEST(Force, VanishesAtCenterOfAchiralSymmetricCavity) {
  const double a = 20 * kLambda;
  const auto cav = CavitySpec::symmetric(a, 0.3, 0.0);
  const auto drive = reference_drive();
  const double scale = std::abs(force(kMcp, cav, drive, 0.3 * a));
  EXPECT_LT(std::abs(force(kMcp, cav, drive, 0.5 * a)), 1e-8 * scale);
}

TEST(Barrier, MirrorsAndEnantiomersSwap) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  const auto drive = reference_drive();
  const auto A = barrier_report(kMcp, cav, drive, MirrorSide::A);
  const auto B = barrier_report(kMcp, cav, drive, MirrorSide::B);
  ASSERT_TRUE(A.repelled.has_value());
  ASSERT_TRUE(B.repelled.has_value());
  EXPECT_EQ(*A.repelled, Enantiomer::positive);
  EXPECT_EQ(*B.repelled, Enantiomer::negative);
  EXPECT_NEAR(A.V_plus, B.V_plus, 1e-6 * A.V_plus);
  EXPECT_NEAR(A.V_minus, B.V_minus, 1e-6 * A.V_minus);
  EXPECT_NEAR(A.positive.position, B.negative.position, 1e-3 * A.positive.position);
}

TEST(Barrier, AchiralMirrorsDoNotDiscriminate) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.0);
  const auto r = barrier_report(kMcp, cav, reference_drive(), MirrorSide::A);
  EXPECT_EQ(r.V_plus, r.V_minus);
  EXPECT_FALSE(r.repelled.has_value());
}

TEST(Barrier, UndrivenAchiralCavityIsBarrierless) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.0);
  const auto r = barrier_report(kMcp, cav, DriveSpec::undriven(), MirrorSide::A);
  EXPECT_TRUE(r.barrierless);
}

TEST(Curve, CsvShapeAndMirrorColumn) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  const auto zs = log_grid(1e-8, 1e-6, 5);
  const auto curve = potential_curve(kMcp, cav, reference_drive(), zs, true, 2);
  ASSERT_EQ(curve.points.size(), 5u);
  const std::string csv = curve.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "z_m,U0e_J,U1e_J,U0c_J,U1c_J,U_driven_J,U_driven_mirror_J");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  for (const auto& p : curve.points) {
    EXPECT_NEAR(p.U_driven, driven_potential(kMcp, cav, reference_drive(), p.z), 1e-14 * std::abs(p.U_driven));
  }
}

TEST(Potential, RejectsPositionsOutsideCavity) {
  const auto cav = CavitySpec::symmetric(1e-3, 0.05, 0.8);
  EXPECT_THROW(potential_zero_T(kMcp, cav, -1e-9), DomainError);
  EXPECT_THROW(potential_zero_T(kMcp, cav, 1e-3), DomainError);
  EXPECT_THROW(potential_thermal(kMcp, cav, 1e-6, 0.0), DomainError);
}
