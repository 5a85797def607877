#include "chiralcp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "chiralcp/errors.hpp"
#include "chiralcp/parallel.hpp"

namespace chiralcp {

namespace {

using PC = PhysicalConstants;
using Vec8 = Eigen::Matrix<double, 8, 1>;

// Layout of the per-side vectors: [U0e, U0c, dU0e, dU0c] for mirror A, then B.
Vec8 pack(const std::array<greens::ImaginaryKernel, 2>& k, double e_weight, double c_weight) {
  Vec8 v;
  for (int s = 0; s < 2; ++s) {
    v(4 * s + 0) = e_weight * k[s].xi2_tr_G;
    v(4 * s + 1) = c_weight * k[s].xi_tr_curl_G;
    v(4 * s + 2) = e_weight * k[s].d_xi2_tr_G;
    v(4 * s + 3) = c_weight * k[s].d_xi_tr_curl_G;
  }
  return v;
}

Eigen::Vector4d fold(const Vec8& v) { return v.head<4>() + v.tail<4>(); }

void check(const MoleculeSpec& molecule, const CavitySpec& cavity, double z) {
  molecule.validate();
  cavity.validate();
  cavity.check_position(z);
}

// Breakpoints in u (xi = omega10 tan u) at multiples of each mirror's decay rate c / 2d.
std::vector<double> u_breakpoints(double omega10, double z, double a) {
  std::vector<double> u{0.0, 0.25 * kPi, 0.5 * kPi};
  for (double d : {z, a - z}) {
    const double xi_d = PC::c / (2.0 * d);
    for (double s : {0.03, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0}) u.push_back(std::atan(s * xi_d / omega10));
  }
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }), u.end());
  // Drop points so close to pi/2 that tan(u) overflows the useful range.
  while (u.size() > 2 && u[u.size() - 2] > 0.5 * kPi - 1e-12) u.erase(u.end() - 2);
  return u;
}

// Imaginary-frequency (nonresonant) parts at T = 0: [U0e, U0c, dU0e, dU0c].
Eigen::Vector4d nonresonant_zero_T(const MoleculeSpec& m, const CavitySpec& cavity, double z,
                                   const greens::GreensOptions& gopts, const quad::QuadratureConfig& qcfg) {
  const double w = m.omega10;
  const double e_pref = PC::mu0 * m.dipole_d01 * m.dipole_d01 / (3.0 * kPi);
  const double c_pref = 2.0 * PC::mu0 * m.rotatory_R01() / (3.0 * kPi);
  auto integrand = [&](double u) -> Vec8 {
    const double t = std::tan(u);
    return pack(greens::imaginary_kernel_sides(w * t, z, cavity, gopts), e_pref, c_pref * t);
  };
  return fold(quad::integrate_adaptive_pieces(integrand, u_breakpoints(w, z, cavity.width_a), qcfg).value);
}

// Matsubara sum: [U0e, U0c, dU0e, dU0c].
Eigen::Vector4d nonresonant_thermal(const MoleculeSpec& m, const CavitySpec& cavity, double z, double T,
                                    const greens::GreensOptions& gopts, const quad::SeriesConfig& scfg) {
  const double step = 2.0 * kPi * PC::kB * T / PC::hbar;
  const double kT = PC::kB * T;
  auto term = [&](int j) -> Vec8 {
    const double xi = step * j;
    const double e_w = PC::mu0 * kT * polarizability(m, xi);
    const double c_w = -2.0 * PC::mu0 * kT * chiral_response(m, xi);
    return pack(greens::imaginary_kernel_sides(xi, z, cavity, gopts), e_w, c_w);
  };
  return fold(quad::sum_series(term, 0.5, scfg).value);
}

struct Resonant {
  double e = 0.0, c = 0.0, de = 0.0, dc = 0.0;  // excited-state weights (n + 1 = 1)
};

Resonant resonant_parts(const MoleculeSpec& m, const CavitySpec& cavity, double z, const greens::GreensOptions& gopts) {
  const auto k = greens::real_kernel(m.omega10, z, cavity, gopts);
  const double w = m.omega10;
  const double e_pref = -(PC::mu0 / 3.0) * w * w * m.dipole_d01 * m.dipole_d01;
  const double c_pref = 2.0 * PC::mu0 * w * m.rotatory_R01() / 3.0;
  return Resonant{e_pref * k.tr_G.real(), c_pref * k.tr_curl_G.real(), e_pref * k.d_tr_G.real(),
                  c_pref * k.d_tr_curl_G.real()};
}

PotentialSample assemble(const Eigen::Vector4d& nonres, const Resonant& res, double n, double z, double T,
                         bool thermal) {
  PotentialSample s;
  auto fill = [&](PotentialComponents& pc, double ue, double uc, double re, double rc) {
    pc.U0e = {ue, -n * re};
    pc.U0c = {uc, -n * rc};
    pc.U1e = {-ue, (n + 1.0) * re};
    pc.U1c = {-uc, (n + 1.0) * rc};
    pc.z = z;
    pc.temperature = T;
    pc.thermal = thermal;
  };
  fill(s.value, nonres(0), nonres(1), res.e, res.c);
  fill(s.dz, nonres(2), nonres(3), res.de, res.dc);
  return s;
}

}  // namespace

double polarizability(const MoleculeSpec& molecule, double xi) {
  const double w = molecule.omega10;
  return (2.0 / (3.0 * PC::hbar)) * w * molecule.dipole_d01 * molecule.dipole_d01 / (w * w + xi * xi);
}

double chiral_response(const MoleculeSpec& molecule, double xi) {
  const double w = molecule.omega10;
  return -(2.0 / (3.0 * PC::hbar)) * xi * molecule.rotatory_R01() / (w * w + xi * xi);
}

greens::GreensOptions PotentialOptions::greens_for(const MoleculeSpec& molecule, const CavitySpec& cavity) const {
  greens::GreensOptions g = greens;
  if (resummation) {
    g.resummation = *resummation;
  } else {
    g.resummation = cavity.width_a > 50.0 * molecule.wavelength() ? greens::Resummation::single_reflection
                                                                   : greens::Resummation::full_series;
  }
  return g;
}

PotentialSample potential_zero_T(const MoleculeSpec& molecule, const CavitySpec& cavity, double z,
                                 const PotentialOptions& opts) {
  check(molecule, cavity, z);
  const auto g = opts.greens_for(molecule, cavity);
  const auto nonres = nonresonant_zero_T(molecule, cavity, z, g, opts.xi_quadrature);
  return assemble(nonres, resonant_parts(molecule, cavity, z, g), 0.0, z, 0.0, false);
}

ResonantParts resonant_excited(const MoleculeSpec& molecule, const CavitySpec& cavity, double z,
                               const PotentialOptions& opts) {
  check(molecule, cavity, z);
  const auto r = resonant_parts(molecule, cavity, z, opts.greens_for(molecule, cavity));
  return {r.e, r.c};
}

PotentialSample potential_thermal(const MoleculeSpec& molecule, const CavitySpec& cavity, double z, double T,
                                  const PotentialOptions& opts) {
  check(molecule, cavity, z);
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("potential_thermal: temperature must be > 0");
  const auto g = opts.greens_for(molecule, cavity);
  const double n = opts.photon_number_override.value_or(thermal_photon_number(molecule.omega10, T));
  const auto nonres = nonresonant_thermal(molecule, cavity, z, T, g, opts.matsubara);
  return assemble(nonres, resonant_parts(molecule, cavity, z, g), n, z, T, true);
}

PotentialSample potential_components(const MoleculeSpec& molecule, const CavitySpec& cavity, double z, double T,
                                     const PotentialOptions& opts) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("temperature must be >= 0");
  if (T > 0.0) {
    const double n = opts.photon_number_override.value_or(thermal_photon_number(molecule.omega10, T));
    if (n >= opts.thermal_threshold) return potential_thermal(molecule, cavity, z, T, opts);
  }
  auto s = potential_zero_T(molecule, cavity, z, opts);
  s.value.temperature = s.dz.temperature = T;
  return s;
}

double driven_potential(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive, double z,
                        const PotentialOptions& opts) {
  drive.validate();
  const auto p = time_averaged_populations(drive.rabi_frequency(molecule), drive.detuning_delta);
  return potential_components(molecule, cavity, z, drive.temperature, opts).value.weighted(p);
}

double force(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive, double z,
             const PotentialOptions& opts) {
  drive.validate();
  const auto p = time_averaged_populations(drive.rabi_frequency(molecule), drive.detuning_delta);
  return -potential_components(molecule, cavity, z, drive.temperature, opts).dz.weighted(p);
}

std::string PotentialCurve::to_csv() const {
  const bool mirror = !points.empty() && points.front().U_driven_mirror.has_value();
  std::ostringstream os;
  os << "z_m,U0e_J,U1e_J,U0c_J,U1c_J,U_driven_J" << (mirror ? ",U_driven_mirror_J" : "") << "\n";
  char buf[64];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << (last ? "\n" : ",");
  };
  for (const auto& p : points) {
    put(p.z, false);
    put(p.components.U0e.total(), false);
    put(p.components.U1e.total(), false);
    put(p.components.U0c.total(), false);
    put(p.components.U1c.total(), false);
    put(p.U_driven, !mirror);
    if (mirror) put(*p.U_driven_mirror, true);
  }
  return os.str();
}

PotentialCurve potential_curve(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive,
                               const std::vector<double>& zs, bool with_mirror_enantiomer, int workers,
                               const PotentialOptions& opts) {
  drive.validate();
  PotentialCurve curve;
  curve.populations = time_averaged_populations(drive.rabi_frequency(molecule), drive.detuning_delta);
  curve.points.resize(zs.size());
  const auto& p = curve.populations;
  parallel_for(zs.size(), workers, [&](std::size_t i) {
    const auto s = potential_components(molecule, cavity, zs[i], drive.temperature, opts);
    CurvePoint& cp = curve.points[i];
    cp.z = zs[i];
    cp.components = s.value;
    cp.U_driven = s.value.weighted(p);
    cp.dU_driven = s.dz.weighted(p);
    if (with_mirror_enantiomer) {
      // R01 -> -R01 flips only the chiral components.
      PotentialComponents flipped = s.value;
      flipped.U0c = {-s.value.U0c.nonresonant, -s.value.U0c.resonant};
      flipped.U1c = {-s.value.U1c.nonresonant, -s.value.U1c.resonant};
      cp.U_driven_mirror = flipped.weighted(p);
    }
  });
  return curve;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw DomainError("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<size_t>(n));
  const double r = std::log(hi / lo);
  for (int i = 0; i < n; ++i) g[i] = lo * std::exp(r * i / (n - 1));
  g.back() = hi;
  return g;
}

BarrierReport barrier_report(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive,
                             MirrorSide side, const PotentialOptions& opts, int workers) {
  drive.validate();
  cavity.validate();
  const double a = cavity.width_a;
  if (!(opts.z_min < 0.5 * a)) throw DomainError("barrier_report: cavity narrower than 2 z_min");
  MoleculeSpec pos = molecule;
  pos.rotatory_R01_over_c = std::abs(molecule.rotatory_R01_over_c);
  const auto p = time_averaged_populations(drive.rabi_frequency(pos), drive.detuning_delta);

  auto position = [&](double s) { return side == MirrorSide::A ? s : a - s; };
  // (U_positive, U_negative) at distance s from the mirror.
  auto both = [&](double s) {
    const auto v = potential_components(pos, cavity, position(s), drive.temperature, opts).value;
    const double e = p.p0 * v.U0e.total() + p.p1 * v.U1e.total();
    const double c = p.p0 * v.U0c.total() + p.p1 * v.U1c.total();
    return std::pair<double, double>(e + c, e - c);
  };

  const auto grid = log_grid(opts.z_min, 0.5 * a, 400);
  std::vector<std::pair<double, double>> U(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t i) { U[i] = both(grid[i]); });
  const auto ref = U.back();

  auto analyse = [&](bool positive) {
    auto pick = [positive](const std::pair<double, double>& u) { return positive ? u.first : u.second; };
    const double u_ref = pick(ref);
    size_t best = 0;
    for (size_t i = 1; i < U.size(); ++i) {
      if (pick(U[i]) > pick(U[best])) best = i;
    }
    BarrierSide b;
    if (best + 1 == U.size() || pick(U[best]) - u_ref <= 0.0) return b;  // monotonic attraction
    b.has_barrier = true;
    double s_best = grid[best];
    double u_best = pick(U[best]);
    if (best > 0) {
      // Golden-section maximisation on the bracketing grid interval.
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double lo = grid[best - 1], hi = grid[best + 1];
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = pick(both(x1)), f2 = pick(both(x2));
      while (hi - lo > 1e-3 * s_best) {
        if (f1 > f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - g * (hi - lo);
          f1 = pick(both(x1));
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + g * (hi - lo);
          f2 = pick(both(x2));
        }
      }
      const double s_mid = 0.5 * (lo + hi);
      const double f_mid = pick(both(s_mid));
      if (f_mid > u_best) {
        u_best = f_mid;
        s_best = s_mid;
      }
    }
    b.V = u_best - u_ref;
    b.position = s_best;
    b.threshold_speed = std::sqrt(2.0 * b.V / molecule.mass);
    return b;
  };

  BarrierReport r;
  r.side = side;
  r.positive = analyse(true);
  r.negative = analyse(false);
  r.barrierless = !r.positive.has_barrier && !r.negative.has_barrier;
  r.V_plus = std::max(r.positive.V, r.negative.V);
  r.V_minus = std::min(r.positive.V, r.negative.V);
  r.v_plus = std::sqrt(2.0 * r.V_plus / molecule.mass);
  r.v_minus = std::sqrt(2.0 * r.V_minus / molecule.mass);
  const double scale = std::max(std::abs(r.V_plus), 1e-300);
  if (std::abs(r.positive.V - r.negative.V) > 1e-9 * scale) {
    r.repelled = r.positive.V > r.negative.V ? Enantiomer::positive : Enantiomer::negative;
  }
  return r;
}

}  // namespace chiralcp
