#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "chiralcp/dynamics.hpp"
#include "chiralcp/errors.hpp"

using namespace chiralcp;
using namespace chiralcp::dynamics;

namespace {

constexpr double kA = 1e-3;
const MoleculeSpec kMcp = molecule_preset("3MCP-eq");

DriveSpec reference_drive() {
  DriveSpec d;
  d.intensity = 5e4;
  d.detuning_delta = 2.0 * kPi * 1e5;
  return d;
}

CavitySpec reference_cavity() { return CavitySpec::symmetric(kA, 0.05, 0.8); }

// Fields are expensive; build each enantiomer once for the whole binary.
const ForceField& field_for(Enantiomer e) {
  static std::unique_ptr<ForceField> pos, neg;
  auto& slot = e == Enantiomer::positive ? pos : neg;
  if (!slot) {
    slot = std::make_unique<ForceField>(
        ForceField::build(molecule_preset("3MCP-eq", e), reference_cavity(), reference_drive(), {}, 4000, 1));
  }
  return *slot;
}

TrajectoryState launch(double v) { return TrajectoryState{0.5 * kA, v, 0.0, Fate::in_flight}; }

double energy(const ForceField& f, const TrajectoryState& s) {
  return 0.5 * kMcp.mass * s.v_z * s.v_z + f.potential(s.z);
}

}  // namespace

TEST(Grid, HybridGridShape) {
  const auto g = hybrid_grid(kA, 1e-8, 5e-6, 400);
  ASSERT_EQ(g.size(), 400u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-8);
  EXPECT_DOUBLE_EQ(g.back(), kA - 1e-8);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], kA - g[g.size() - 1 - i], 1e-18);
}

TEST(Field, InterpolantReproducesCubic) {
  auto U = [](double z) { return std::pair{z * z * z - 2.0 * z, 3.0 * z * z - 2.0}; };
  const auto f = ForceField::from_function(U, {0.0, 0.3, 0.5, 1.2, 2.0}, 0.0, 2.0);
  for (double z : {0.01, 0.42, 0.9, 1.77}) {
    EXPECT_NEAR(f.potential(z), U(z).first, 1e-14);
    EXPECT_NEAR(f.force(z), -U(z).second, 1e-13);
  }
}

TEST(Trajectory, FreeFlight) {
  const auto f = ForceField::from_function([](double) { return std::pair{0.0, 0.0}; }, hybrid_grid(2e-3, 1e-8, 1e-5, 200),
                                           0.0, 2e-3);
  const auto t = integrate_trajectory({1e-4, 8e-4, 0.0, Fate::in_flight}, f, kMcp.mass, 1.0);
  EXPECT_EQ(t.final_state.fate, Fate::in_flight);
  EXPECT_DOUBLE_EQ(t.final_state.t, 1.0);
  EXPECT_NEAR(t.final_state.z, 9e-4, 1e-15);
  EXPECT_EQ(t.final_state.v_z, 8e-4);
}

TEST(Trajectory, HarmonicWellMatchesAnalytic) {
  const double k = 1e-20, m = kMcp.mass, c = 1e-3;
  const auto f = ForceField::from_function(
      [&](double z) { return std::pair{0.5 * k * (z - c) * (z - c), k * (z - c)}; },
      hybrid_grid(2e-3, 1e-8, 1e-5, 500), 0.0, 2e-3);
  const double w = std::sqrt(k / m), amp = 2e-4;
  const double T = 3.0 * 2.0 * kPi / w;
  const auto t = integrate_trajectory({c + amp, 0.0, 0.0, Fate::in_flight}, f, m, T);
  EXPECT_NEAR(t.final_state.z, c + amp, 1e-6 * amp);
  for (const auto& s : t.history) EXPECT_NEAR(s.z, c + amp * std::cos(w * s.t), 1e-6 * amp);
}

TEST(Trajectory, CollectedOnlyAtPlanes) {
  const auto f = ForceField::from_function([](double) { return std::pair{0.0, 0.0}; }, hybrid_grid(1e-3, 1e-8, 1e-5, 200),
                                           0.0, 1e-3);
  const auto t = integrate_trajectory({5e-4, -1e-3, 0.0, Fate::in_flight}, f, kMcp.mass, 2.0);
  EXPECT_EQ(t.final_state.fate, Fate::collected_A);
  EXPECT_NEAR(t.final_state.z, 1e-8, 1e-18);
  EXPECT_NEAR(t.final_state.t, (5e-4 - 1e-8) / 1e-3, 1e-12);
}

TEST(Trajectory, ReferenceFieldFates) {
  const auto& f = field_for(Enantiomer::positive);
  // Positive enantiomer: high barrier at A, low barrier at B.
  EXPECT_EQ(integrate_trajectory(launch(9e-4), f, kMcp.mass, 3.0, {}).final_state.fate, Fate::collected_B);
  EXPECT_EQ(integrate_trajectory(launch(-9e-4), f, kMcp.mass, 3.0, {}).final_state.fate, Fate::collected_B);
}

TEST(Trajectory, ThresholdSpeeds) {
  // Positive enantiomer launched from the center: barriers of 0.675 mm/s at B
  // and 1.245 mm/s at A in speed units. Energy conservation fixes the fates.
  const auto& f = field_for(Enantiomer::positive);
  IntegratorControls c;
  c.record_history = false;
  auto fate = [&](double v) { return integrate_trajectory(launch(v), f, kMcp.mass, 3.0, c).final_state.fate; };
  EXPECT_EQ(fate(7.0e-4), Fate::collected_B);
  EXPECT_EQ(fate(6.5e-4), Fate::in_flight);
  EXPECT_EQ(fate(-1.29e-3), Fate::collected_A);
  EXPECT_EQ(fate(-1.20e-3), Fate::collected_B);
}

TEST(Trajectory, EnergyConserved) {
  // Drift relative to the largest kinetic energy reached; runs that end on a
  // collection plane sample the steep near-surface well.
  const auto& f = field_for(Enantiomer::positive);
  for (double v : {-3e-4, 2e-4, -1.1e-3}) {
    const auto t = integrate_trajectory(launch(v), f, kMcp.mass, 1.5);
    const double e0 = energy(f, t.history.front());
    double worst = 0.0, ke_max = 0.0;
    for (const auto& s : t.history) {
      worst = std::max(worst, std::abs(energy(f, s) - e0));
      ke_max = std::max(ke_max, 0.5 * kMcp.mass * s.v_z * s.v_z);
    }
    EXPECT_LT(worst, 1e-6 * ke_max) << v;
  }
}

TEST(Trajectory, UndrivenMoleculeAtRestStays) {
  const auto f = ForceField::build(kMcp, reference_cavity(), DriveSpec::undriven(), {}, 400, 1);
  const auto t = integrate_trajectory(launch(0.0), f, kMcp.mass, 1.0);
  EXPECT_EQ(t.final_state.fate, Fate::in_flight);
  EXPECT_NEAR(t.final_state.z, 0.5 * kA, 1e-9);
}

TEST(Trajectory, EnantiomersAreMirrorImages) {
  const auto& fp = field_for(Enantiomer::positive);
  const auto& fn = field_for(Enantiomer::negative);
  for (double v : {4e-4, -8e-4}) {
    const auto p = integrate_trajectory(launch(v), fp, kMcp.mass, 1.2);
    const auto n = integrate_trajectory(launch(-v), fn, kMcp.mass, 1.2);
    EXPECT_NEAR(p.final_state.z, kA - n.final_state.z, 1e-9);
    EXPECT_NEAR(p.final_state.t, n.final_state.t, 1e-9);
    const Fate swapped = n.final_state.fate == Fate::collected_A   ? Fate::collected_B
                         : n.final_state.fate == Fate::collected_B ? Fate::collected_A
                                                                   : Fate::in_flight;
    EXPECT_EQ(p.final_state.fate, swapped);
  }
}

TEST(Trajectory, RejectsBadInput) {
  const auto& f = field_for(Enantiomer::positive);
  EXPECT_THROW(integrate_trajectory({0.0, 0.0, 0.0, Fate::in_flight}, f, kMcp.mass, 1.0), DomainError);
  EXPECT_THROW(integrate_trajectory(launch(0.0), f, -1.0, 1.0), DomainError);
}

TEST(Ensemble, DeterministicUnderSeed) {
  EnsembleSpec spec;
  spec.n_molecules = 24;
  spec.z0 = 0.5 * kA;
  spec.v_sigma = 4e-4;
  spec.t_max = 0.5;
  spec.rng_seed = 7;
  const auto& f = field_for(Enantiomer::positive);
  const auto a = run_ensemble(spec, f, kMcp.mass, reference_cavity(), 1);
  const auto b = run_ensemble(spec, f, kMcp.mass, reference_cavity(), 3);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].v0, b.records[i].v0);
    EXPECT_EQ(a.records[i].final_state.z, b.records[i].final_state.z);
    EXPECT_EQ(a.records[i].final_state.fate, b.records[i].final_state.fate);
  }
  spec.rng_seed = 8;
  const auto c = run_ensemble(spec, f, kMcp.mass, reference_cavity(), 1);
  EXPECT_NE(a.records[0].v0, c.records[0].v0);
}

TEST(Ensemble, ExplicitVelocitiesAndCounts) {
  EnsembleSpec spec;
  spec.n_molecules = 3;
  spec.z0 = 0.5 * kA;
  spec.t_max = 1.5;
  spec.initial_velocities = {9e-4, -9e-4, 0.0};
  const auto r = run_ensemble(spec, field_for(Enantiomer::positive), kMcp.mass, reference_cavity());
  EXPECT_EQ(r.records[0].v0, 9e-4);
  EXPECT_EQ(r.stats.n_B + r.stats.n_A + r.stats.n_in_flight, 3);
  EXPECT_EQ(r.stats.designated, MirrorSide::B);
  EXPECT_EQ(r.records[0].final_state.fate, Fate::collected_B);
  EXPECT_EQ(r.records[2].final_state.fate, Fate::in_flight);
  spec.initial_velocities = {1e-4};
  EXPECT_THROW(spec.validate(), DomainError);
}

TEST(Ensemble, DesignatedMirror) {
  const auto cav = reference_cavity();
  EXPECT_EQ(designated_mirror(cav, 1.0), MirrorSide::B);
  EXPECT_EQ(designated_mirror(cav, -1.0), MirrorSide::A);
  EXPECT_FALSE(designated_mirror(CavitySpec::symmetric(kA, 0.05, 0.0), 1.0).has_value());
}

namespace {

SeparationStats stats(Enantiomer e, int n_A, int n_B, MirrorSide designated) {
  SeparationStats s;
  s.spec.enantiomer = e;
  s.spec.n_molecules = 10;
  s.n_A = n_A;
  s.n_B = n_B;
  s.designated = designated;
  return s;
}

}  // namespace

TEST(Separation, ExcessPerMirror) {
  const auto pos = stats(Enantiomer::positive, 0, 6, MirrorSide::B);
  const auto neg = stats(Enantiomer::negative, 6, 0, MirrorSide::A);
  const auto r = separation_report(pos, neg);
  EXPECT_EQ(*r.mirror_A.excess, 1.0);
  EXPECT_EQ(*r.mirror_B.excess, 1.0);

  const auto none = separation_report(stats(Enantiomer::positive, 0, 0, MirrorSide::B),
                                      stats(Enantiomer::negative, 0, 0, MirrorSide::A));
  EXPECT_FALSE(none.mirror_A.excess.has_value());

  const auto mixed = separation_report(stats(Enantiomer::positive, 1, 3, MirrorSide::B),
                                       stats(Enantiomer::negative, 3, 1, MirrorSide::A));
  EXPECT_DOUBLE_EQ(*mixed.mirror_B.excess, 0.5);
  EXPECT_EQ(mixed.mirror_B.n_wrong, 1);
}

TEST(Separation, RejectsMismatchedRuns) {
  auto pos = stats(Enantiomer::positive, 0, 6, MirrorSide::B);
  auto neg = stats(Enantiomer::negative, 6, 0, MirrorSide::A);
  neg.spec.rng_seed = 99;
  EXPECT_THROW(separation_report(pos, neg), ValidationError);
  neg.spec.rng_seed = pos.spec.rng_seed;
  EXPECT_THROW(separation_report(pos, pos), ValidationError);
  neg.designated = MirrorSide::B;
  EXPECT_THROW(separation_report(pos, neg), ValidationError);
}
