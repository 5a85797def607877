#include "chiralcp/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "chiralcp/errors.hpp"
#include "chiralcp/parallel.hpp"

namespace chiralcp::dynamics {

const char* to_string(Fate f) {
  switch (f) {
    case Fate::in_flight: return "in_flight";
    case Fate::collected_A: return "collected_A";
    case Fate::collected_B: return "collected_B";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Force field

ForceField::ForceField(std::vector<double> z, std::vector<double> U, std::vector<double> dU, double mirror_lo,
                       double mirror_hi)
    : z_(std::move(z)), U_(std::move(U)), dU_(std::move(dU)), mirror_lo_(mirror_lo), mirror_hi_(mirror_hi) {
  if (z_.size() < 2 || U_.size() != z_.size() || dU_.size() != z_.size()) {
    throw DomainError("ForceField: need >= 2 grid points with matching U and dU");
  }
  for (std::size_t i = 1; i < z_.size(); ++i) {
    if (!(z_[i] > z_[i - 1])) throw DomainError("ForceField: grid must be strictly increasing");
  }
  if (!(mirror_lo_ <= z_.front() && mirror_hi_ >= z_.back())) {
    throw DomainError("ForceField: mirrors must enclose the grid");
  }
}

std::size_t ForceField::segment(double z) const {
  if (z <= z_.front()) return 0;
  if (z >= z_.back()) return z_.size() - 2;
  return static_cast<std::size_t>(std::upper_bound(z_.begin(), z_.end(), z) - z_.begin()) - 1;
}

std::pair<double, double> ForceField::cell(double z, double direction) const {
  std::size_t i = segment(z);
  const double w = z_[i + 1] - z_[i];
  if (direction < 0.0 && z - z_[i] <= 1e-6 * w && i > 0) {
    --i;
  } else if (direction > 0.0 && z_[i + 1] - z <= 1e-6 * w && i + 2 < z_.size()) {
    ++i;
  }
  return {z_[i], z_[i + 1]};
}

double ForceField::potential(double z) const {
  const std::size_t i = segment(z);
  const double h = z_[i + 1] - z_[i];
  const double t = (z - z_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * U_[i] + (t3 - 2 * t2 + t) * h * dU_[i] + (-2 * t3 + 3 * t2) * U_[i + 1] +
         (t3 - t2) * h * dU_[i + 1];
}

double ForceField::force(double z) const {
  const std::size_t i = segment(z);
  const double h = z_[i + 1] - z_[i];
  const double t = (z - z_[i]) / h;
  const double t2 = t * t;
  const double dU = (6 * t2 - 6 * t) / h * U_[i] + (3 * t2 - 4 * t + 1) * dU_[i] + (-6 * t2 + 6 * t) / h * U_[i + 1] +
                    (3 * t2 - 2 * t) * dU_[i + 1];
  return -dU;
}

std::vector<double> hybrid_grid(double a, double z_min, double near, int n) {
  if (!(a > 2 * z_min && z_min > 0.0 && near > z_min) || n < 8) {
    throw DomainError("hybrid_grid: need a > 2 z_min > 0, near > z_min, n >= 8");
  }
  std::vector<double> g;
  if (near >= 0.5 * a) {
    const auto half = log_grid(z_min, 0.5 * a, n / 2);
    g = half;
    for (auto it = half.rbegin() + 1; it != half.rend(); ++it) g.push_back(a - *it);
    return g;
  }
  const int n_log = n / 4;
  const int n_lin = n - 2 * n_log;
  const auto left = log_grid(z_min, near, n_log);
  g = left;
  const double lo = near, hi = a - near;
  for (int i = 1; i <= n_lin; ++i) g.push_back(lo + (hi - lo) * i / (n_lin + 1));
  for (auto it = left.rbegin(); it != left.rend(); ++it) g.push_back(a - *it);
  return g;
}

ForceField ForceField::from_function(const std::function<std::pair<double, double>(double)>& U_dU,
                                     const std::vector<double>& grid, double mirror_lo, double mirror_hi) {
  std::vector<double> U(grid.size()), dU(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) std::tie(U[i], dU[i]) = U_dU(grid[i]);
  return ForceField(grid, std::move(U), std::move(dU), mirror_lo, mirror_hi);
}

ForceField ForceField::build(const MoleculeSpec& molecule, const CavitySpec& cavity, const DriveSpec& drive,
                             const PotentialOptions& opts, int n_points, int workers) {
  const auto grid = hybrid_grid(cavity.width_a, opts.z_min, 2.0 * molecule.wavelength(), n_points);
  const auto curve = potential_curve(molecule, cavity, drive, grid, false, workers, opts);
  std::vector<double> U(grid.size()), dU(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    U[i] = curve.points[i].U_driven;
    dU[i] = curve.points[i].dU_driven;
  }
  return ForceField(grid, std::move(U), std::move(dU), 0.0, cavity.width_a);
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 - (-92097.0 / 339200), e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

struct Y {
  double z, v;
};

}  // namespace

Trajectory integrate_trajectory(const TrajectoryState& init, const ForceField& field, double mass, double t_max,
                                const IntegratorControls& ctl) {
  if (!(mass > 0.0)) throw DomainError("integrate_trajectory: mass must be > 0");
  if (!(t_max >= init.t)) throw DomainError("integrate_trajectory: t_max must be >= initial time");
  if (!(init.z > field.z_lo() && init.z < field.z_hi())) {
    throw DomainError("integrate_trajectory: initial z outside the collection planes");
  }
  Trajectory out;
  TrajectoryState s = init;
  s.fate = Fate::in_flight;
  if (ctl.record_history) out.history.push_back(s);

  auto rhs = [&](const Y& y) { return Y{y.v, field.force(y.z) / mass}; };
  auto stage = [](const Y& y, double h, std::initializer_list<std::pair<double, Y>> ks) {
    Y r = y;
    for (const auto& [c, k] : ks) {
      r.z += h * c * k.z;
      r.v += h * c * k.v;
    }
    return r;
  };

  double h = std::min(ctl.initial_step, t_max - s.t);
  Y y{s.z, s.v_z};
  Y k1 = rhs(y);
  bool node_limited = false;  // h was cut to land on a node; h_free is the size it replaced
  double h_free = h;
  while (s.t < t_max) {
    if (out.steps + out.rejected >= ctl.max_steps) {
      out.final_state = s;
      throw IntegrationError("integrate_trajectory: step budget exhausted", std::move(out));
    }
    // Resolve the approach to a mirror: never cross more than a fraction of the gap in one step.
    const double gap = std::min(y.z - field.mirror_lo(), field.mirror_hi() - y.z);
    if (y.v != 0.0) h = std::min(h, ctl.distance_fraction * gap / std::abs(y.v));
    h = std::min(h, t_max - s.t);
    if (h < ctl.min_step) {
      out.final_state = s;
      throw IntegrationError("integrate_trajectory: step size underflow", std::move(out));
    }

    const Y y2 = stage(y, h, {{a21, k1}});
    const Y k2 = rhs(y2);
    const Y y3 = stage(y, h, {{a31, k1}, {a32, k2}});
    const Y k3 = rhs(y3);
    const Y y4 = stage(y, h, {{a41, k1}, {a42, k2}, {a43, k3}});
    const Y k4 = rhs(y4);
    const Y y5 = stage(y, h, {{a51, k1}, {a52, k2}, {a53, k3}, {a54, k4}});
    const Y k5 = rhs(y5);
    const Y y6 = stage(y, h, {{a61, k1}, {a62, k2}, {a63, k3}, {a64, k4}, {a65, k5}});
    const Y k6 = rhs(y6);
    const Y y1 = stage(y, h, {{b1, k1}, {b3, k3}, {b4, k4}, {b5, k5}, {b6, k6}});

    // Cubic Hermite in time through (z, v) at both ends of the step.
    auto zt = [&](double th) {
      const double t2 = th * th, t3 = t2 * th;
      return (2 * t3 - 3 * t2 + 1) * y.z + (t3 - 2 * t2 + th) * h * y.v + (-2 * t3 + 3 * t2) * y1.z +
             (t3 - t2) * h * y1.v;
    };

    // dF/dz jumps at grid nodes, which the error estimate does not see. End the
    // step at the first interior node it would cross.
    const auto [c_lo, c_hi] = field.cell(y.z, y.v != 0.0 ? y.v : k1.v);
    const double slack = 1e-6 * (c_hi - c_lo);
    double z_lo_step = y1.z, z_hi_step = y1.z;
    for (const Y* p : {&y2, &y3, &y4, &y5, &y6}) {
      z_lo_step = std::min(z_lo_step, p->z);
      z_hi_step = std::max(z_hi_step, p->z);
    }
    const bool cross_lo = z_lo_step < c_lo - slack && c_lo > field.z_lo();
    const bool cross_hi = z_hi_step > c_hi + slack && c_hi < field.z_hi();
    if (cross_lo || cross_hi) {
      auto inside = [&](double th) {
        const double zz = zt(th);
        return zz >= c_lo && zz <= c_hi;
      };
      constexpr int kScan = 32;
      int j = 1;
      while (j <= kScan && inside(static_cast<double>(j) / kScan)) ++j;
      double theta = 0.5;
      if (j <= kScan) {
        double lo = static_cast<double>(j - 1) / kScan, hi = static_cast<double>(j) / kScan;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (inside(mid) ? lo : hi) = mid;
        }
        theta = hi;
      }
      if (!node_limited) h_free = h;
      node_limited = true;
      h *= theta;
      continue;
    }

    const Y k7 = rhs(y1);
    const double ez = h * (e1 * k1.z + e3 * k3.z + e4 * k4.z + e5 * k5.z + e6 * k6.z + e7 * k7.z);
    const double ev = h * (e1 * k1.v + e3 * k3.v + e4 * k4.v + e5 * k5.v + e6 * k6.v + e7 * k7.v);
    const double sz = ctl.abs_tol_z + ctl.rel_tol * std::max(std::abs(y.z), std::abs(y1.z));
    const double sv = ctl.abs_tol_v + ctl.rel_tol * std::max(std::abs(y.v), std::abs(y1.v));
    const double err = std::max(std::abs(ez) / sz, std::abs(ev) / sv);
    if (!std::isfinite(err)) {
      out.final_state = s;
      throw IntegrationError("integrate_trajectory: non-finite state", std::move(out));
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    if (err > 1.0) {
      ++out.rejected;
      h *= factor;
      continue;
    }
    ++out.steps;

    const bool hit_lo = y1.z <= field.z_lo();
    const bool hit_hi = y1.z >= field.z_hi();
    if (hit_lo || hit_hi) {
      const double plane = hit_lo ? field.z_lo() : field.z_hi();
      // Velocity from its own cubic Hermite through the end accelerations; the
      // derivative of zt is one order lower and shows up as an energy jump.
      auto vt = [&](double th) {
        const double t2 = th * th, t3 = t2 * th;
        return (2 * t3 - 3 * t2 + 1) * y.v + (t3 - 2 * t2 + th) * h * k1.v + (-2 * t3 + 3 * t2) * y1.v +
               (t3 - t2) * h * k7.v;
      };
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const bool outside = hit_lo ? zt(mid) <= plane : zt(mid) >= plane;
        (outside ? hi : lo) = mid;
      }
      s.t += hi * h;
      s.z = plane;
      s.v_z = vt(hi);
      s.fate = hit_lo ? Fate::collected_A : Fate::collected_B;
      if (ctl.record_history) out.history.push_back(s);
      out.final_state = s;
      return out;
    }

    s.t += h;
    if (t_max - s.t < 1e-15 * t_max) s.t = t_max;
    y = y1;
    s.z = y.z;
    s.v_z = y.v;
    if (ctl.record_history) out.history.push_back(s);
    k1 = k7;  // first-same-as-last
    h *= factor;
    if (node_limited) {
      h = std::max(h, h_free);
      node_limited = false;
    }
  }
  out.final_state = s;
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

void EnsembleSpec::validate() const {
  if (n_molecules < 1) throw DomainError("ensemble.n_molecules must be >= 1");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("ensemble.t_max must be > 0");
  if (!(v_sigma >= 0.0) || !std::isfinite(v_sigma)) throw DomainError("ensemble.v_sigma must be >= 0");
  if (!std::isfinite(v_mean) || !std::isfinite(z0)) throw DomainError("ensemble.v_mean and z0 must be finite");
  if (!initial_velocities.empty()) {
    if (initial_velocities.size() != static_cast<std::size_t>(n_molecules)) {
      throw DomainError("ensemble.initial_velocities must have n_molecules entries");
    }
    for (double v : initial_velocities) {
      if (!std::isfinite(v)) throw DomainError("ensemble.initial_velocities must be finite");
    }
  }
}

std::optional<MirrorSide> designated_mirror(const CavitySpec& cavity, double r_sign) {
  // R01 r_c(A) > 0: high barrier at A, so the molecule is collected at B.
  const double s = r_sign * cavity.mirror_a.r_c;
  if (s == 0.0) return std::nullopt;
  return s > 0.0 ? MirrorSide::B : MirrorSide::A;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec, const ForceField& field, double mass, const CavitySpec& cavity,
                            int workers, bool keep_history, const IntegratorControls& controls) {
  spec.validate();
  if (!(spec.z0 > field.z_lo() && spec.z0 < field.z_hi())) {
    throw DomainError("ensemble.z0 must lie strictly between the collection planes");
  }
  EnsembleResult res;
  res.records.resize(static_cast<std::size_t>(spec.n_molecules));
  IntegratorControls ctl = controls;
  ctl.record_history = keep_history;

  parallel_for(res.records.size(), workers, [&](std::size_t i) {
    // Independent substream per trajectory: the result does not depend on scheduling.
    std::seed_seq seq{static_cast<std::uint32_t>(spec.rng_seed), static_cast<std::uint32_t>(spec.rng_seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> dist(spec.v_mean, spec.v_sigma);
    double v0 = spec.v_sigma > 0.0 ? dist(rng) : spec.v_mean;
    if (!spec.initial_velocities.empty()) v0 = spec.initial_velocities[i];
    TrajectoryRecord& rec = res.records[i];
    rec.id = i;
    rec.v0 = v0;
    const TrajectoryState init{spec.z0, v0, 0.0, Fate::in_flight};
    try {
      auto tr = integrate_trajectory(init, field, mass, spec.t_max, ctl);
      rec.final_state = tr.final_state;
      rec.history = std::move(tr.history);
    } catch (const IntegrationError& e) {
      rec.error = e.what();
      rec.final_state = e.partial().final_state;
      rec.final_state.fate = Fate::in_flight;
      rec.history = e.partial().history;
    }
  });

  SeparationStats& st = res.stats;
  st.spec = spec;
  st.designated = designated_mirror(cavity, sign_of(spec.enantiomer));
  std::vector<double> times;
  for (const auto& r : res.records) {
    if (r.error) ++st.n_failed;
    switch (r.final_state.fate) {
      case Fate::collected_A:
        ++st.n_A;
        times.push_back(r.final_state.t);
        break;
      case Fate::collected_B:
        ++st.n_B;
        times.push_back(r.final_state.t);
        break;
      case Fate::in_flight: ++st.n_in_flight; break;
    }
  }
  const double n = spec.n_molecules;
  st.fraction_A = st.n_A / n;
  st.fraction_B = st.n_B / n;
  st.fraction_in_flight = st.n_in_flight / n;
  const int collected = st.n_A + st.n_B;
  if (collected > 0 && st.designated) {
    st.side_purity = static_cast<double>(*st.designated == MirrorSide::A ? st.n_A : st.n_B) / collected;
  }
  if (!times.empty()) {
    std::sort(times.begin(), times.end());
    const std::size_t m = times.size();
    st.median_collection_time = m % 2 ? times[m / 2] : 0.5 * (times[m / 2 - 1] + times[m / 2]);
  }
  return res;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec, const CavitySpec& cavity, const MoleculeSpec& molecule,
                            const DriveSpec& drive, int workers, bool keep_history, const PotentialOptions& opts) {
  MoleculeSpec m = molecule;
  m.rotatory_R01_over_c = sign_of(spec.enantiomer) * std::abs(molecule.rotatory_R01_over_c);
  const auto field = ForceField::build(m, cavity, drive, opts, 4000, workers);
  return run_ensemble(spec, field, m.mass, cavity, workers, keep_history);
}

std::string EnsembleResult::trajectories_csv() const {
  std::ostringstream os;
  os << "traj_id,t_s,z_m,vz_m_per_s,fate\n";
  char buf[160];
  auto row = [&](std::size_t id, const TrajectoryState& s) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%s\n", id, s.t, s.z, s.v_z, to_string(s.fate));
    os << buf;
  };
  for (const auto& r : records) {
    if (!r.history.empty()) {
      for (const auto& s : r.history) row(r.id, s);
    } else {
      row(r.id, TrajectoryState{stats.spec.z0, r.v0, 0.0, Fate::in_flight});
      row(r.id, r.final_state);
    }
  }
  return os.str();
}

SeparationSummary separation_report(const SeparationStats& pos, const SeparationStats& neg) {
  const auto& a = pos.spec;
  const auto& b = neg.spec;
  if (a.enantiomer == b.enantiomer) throw ValidationError("separation_report: runs must use opposite enantiomers");
  if (a.n_molecules != b.n_molecules || a.z0 != b.z0 || a.v_mean != b.v_mean || a.v_sigma != b.v_sigma ||
      a.t_max != b.t_max || a.rng_seed != b.rng_seed || a.initial_velocities != b.initial_velocities) {
    throw ValidationError("separation_report: ensemble specs differ beyond the enantiomer");
  }
  if (pos.designated.has_value() != neg.designated.has_value() ||
      (pos.designated && *pos.designated == *neg.designated)) {
    throw ValidationError("separation_report: runs do not come from the same chiral cavity");
  }
  SeparationSummary out;
  auto fill = [](MirrorExcess& m, int correct, int wrong) {
    m.n_correct = correct;
    m.n_wrong = wrong;
    if (correct + wrong > 0) m.excess = static_cast<double>(correct - wrong) / (correct + wrong);
  };
  if (!pos.designated) {
    // Achiral mirrors: no enantiomer is "correct"; report counts as symmetric no-discrimination.
    fill(out.mirror_A, pos.n_A, neg.n_A);
    fill(out.mirror_B, pos.n_B, neg.n_B);
    return out;
  }
  const bool pos_to_A = *pos.designated == MirrorSide::A;
  fill(out.mirror_A, pos_to_A ? pos.n_A : neg.n_A, pos_to_A ? neg.n_A : pos.n_A);
  fill(out.mirror_B, pos_to_A ? neg.n_B : pos.n_B, pos_to_A ? pos.n_B : neg.n_B);
  return out;
}

}  // namespace chiralcp::dynamics
