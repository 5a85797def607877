#include "chiralcp_cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "chiralcp/errors.hpp"
#include "chiralcp/parallel.hpp"
#include "chiralcp_cli/manifest.hpp"
#include "json.hpp"

#ifndef CHIRALCP_VERSION_STRING
#define CHIRALCP_VERSION_STRING "unknown"
#endif

namespace chiralcp::cli {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const char* side_name(MirrorSide s) { return s == MirrorSide::A ? "A" : "B"; }

json populations_json(const Populations& p) { return {{"p0", p.p0}, {"p1", p.p1}}; }

json barrier_side_json(const BarrierSide& b) {
  return {{"has_barrier", b.has_barrier},
          {"V_J", b.V},
          {"position_m", b.position},
          {"threshold_speed_m_per_s", b.threshold_speed}};
}

json barrier_json(const BarrierReport& r) {
  json repelled = nullptr;
  if (r.repelled) repelled = *r.repelled == Enantiomer::positive ? "positive" : "negative";
  return {{"side", side_name(r.side)},
          {"positive", barrier_side_json(r.positive)},
          {"negative", barrier_side_json(r.negative)},
          {"V_plus_J", r.V_plus},
          {"V_minus_J", r.V_minus},
          {"v_plus_m_per_s", r.v_plus},
          {"v_minus_m_per_s", r.v_minus},
          {"repelled", repelled},
          {"barrierless", r.barrierless}};
}

std::vector<MirrorSide> barrier_sides(const ScenarioConfig& c) {
  const std::string side = c.barrier ? c.barrier->side : "both";
  if (side == "A") return {MirrorSide::A};
  if (side == "B") return {MirrorSide::B};
  return {MirrorSide::A, MirrorSide::B};
}

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json stats_json(const dynamics::SeparationStats& s) {
  json designated = nullptr;
  if (s.designated) designated = side_name(*s.designated);
  return {{"enantiomer", s.spec.enantiomer == Enantiomer::positive ? "positive" : "negative"},
          {"n_molecules", s.spec.n_molecules},
          {"fraction_A", s.fraction_A},
          {"fraction_B", s.fraction_B},
          {"fraction_in_flight", s.fraction_in_flight},
          {"collected_fraction", s.collected_fraction()},
          {"n_A", s.n_A},
          {"n_B", s.n_B},
          {"n_in_flight", s.n_in_flight},
          {"n_failed", s.n_failed},
          {"designated_mirror", designated},
          {"side_purity", optional_number(s.side_purity)},
          {"median_collection_time_s", optional_number(s.median_collection_time)}};
}

json excess_json(const dynamics::MirrorExcess& m) {
  return {{"excess", optional_number(m.excess)}, {"n_correct", m.n_correct}, {"n_wrong", m.n_wrong}};
}

std::string records_csv(const dynamics::EnsembleResult& r) {
  std::string out = "traj_id,v0_m_per_s,t_final_s,z_final_m,vz_final_m_per_s,fate,error\n";
  char buf[256];
  for (const auto& rec : r.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%s,%s\n", rec.id, rec.v0, rec.final_state.t,
                  rec.final_state.z, rec.final_state.v_z, dynamics::to_string(rec.final_state.fate),
                  rec.error ? "1" : "0");
    out += buf;
  }
  return out;
}

/// Maximum of |f| on [lo, hi]: scan, then golden-section refinement around the best sample.
double max_abs(const std::function<double(double)>& f, double lo, double hi, int samples) {
  if (!(hi > lo)) return std::abs(f(0.5 * (lo + hi)));
  std::vector<double> v(static_cast<std::size_t>(samples));
  const double dz = (hi - lo) / (samples - 1);
  std::size_t best = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::abs(f(lo + dz * static_cast<double>(i)));
    if (v[i] > v[best]) best = i;
  }
  double a = lo + dz * static_cast<double>(best > 0 ? best - 1 : 0);
  double b = lo + dz * static_cast<double>(std::min(best + 1, v.size() - 1));
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = std::abs(f(x1)), f2 = std::abs(f(x2));
  for (int it = 0; it < 40; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = std::abs(f(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = std::abs(f(x2));
    }
  }
  return std::max({v[best], f1, f2});
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

CommandResult cmd_potential(const ScenarioConfig& c, int workers) {
  const MoleculeSpec mol = c.molecule_spec();
  const CavitySpec base = c.cavity_spec();
  const DriveSpec drive = c.drive_spec();
  const PotentialOptions opts = c.potential_options();

  PotentialBlock p;
  if (c.potential) {
    p = *c.potential;
  } else {
    p.z_grid = {"log", c.numerics.z_min, 0.5 * c.cavity.width, 200, {}};
  }
  const auto zs = p.z_grid.resolve();
  std::vector<double> temps = p.temperatures;
  if (temps.empty()) temps.push_back(drive.temperature);
  std::vector<std::optional<MirrorBlock>> sets(p.mirror_sets.begin(), p.mirror_sets.end());
  if (sets.empty()) sets.emplace_back();

  const Populations pops = time_averaged_populations(drive.rabi_frequency(mol), drive.detuning_delta);
  CommandResult out;
  json curves = json::array();
  for (const auto& set : sets) {
    const CavitySpec cav = set ? CavitySpec::symmetric(base.width_a, set->r_e, set->r_c) : base;
    for (double T : temps) {
      DriveSpec d = drive;
      d.temperature = T;
      const auto curve = potential_curve(mol, cav, d, zs, p.both_enantiomers, workers, opts);
      std::string name = "potential";
      if (set) name += "_re" + fmt_g(set->r_e) + "_rc" + fmt_g(set->r_c);
      if (!p.temperatures.empty()) name += "_T" + fmt_g(T) + "K";
      name += ".csv";
      out.files.push_back({name, curve.to_csv()});
      curves.push_back({{"file", name},
                        {"temperature_K", T},
                        {"photon_number", thermal_photon_number(mol.omega10, T)},
                        {"mirror_a", {{"r_e", cav.mirror_a.r_e}, {"r_c", cav.mirror_a.r_c}}},
                        {"mirror_b", {{"r_e", cav.mirror_b.r_e}, {"r_c", cav.mirror_b.r_c}}},
                        {"points", zs.size()}});
    }
  }

  json summary = {{"command", "potential"},
                  {"molecule", mol.name},
                  {"wavelength_m", mol.wavelength()},
                  {"rabi_frequency_per_s", drive.rabi_frequency(mol)},
                  {"populations", populations_json(pops)},
                  {"curves", curves}};
  if (p.barrier) {
    json reports = json::array();
    for (MirrorSide s : barrier_sides(c)) reports.push_back(barrier_json(barrier_report(mol, base, drive, s, opts, workers)));
    summary["barriers"] = reports;
  }
  out.summary = summary.dump(2) + "\n";
  out.files.push_back({"summary.json", out.summary});
  return out;
}

std::vector<EnhancementRow> enhancement_table(const ScenarioConfig& c, int workers) {
  const MoleculeSpec mol = c.molecule_spec();
  const EnhancementBlock blk = c.enhancement.value_or(EnhancementBlock{});
  PotentialOptions opts = c.potential_options();
  if (!opts.resummation || *opts.resummation == greens::Resummation::single_reflection) {
    opts.resummation = greens::Resummation::full_series;
  }
  const double lambda = mol.wavelength();
  std::vector<EnhancementRow> rows(static_cast<std::size_t>(blk.nu_max - blk.nu_min + 1));
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    EnhancementRow& r = rows[i];
    r.nu = blk.nu_min + static_cast<int>(i);
    r.width = r.nu * lambda / 4.0;
    CavitySpec cav = c.cavity_spec();
    cav.width_a = r.width;
    auto chiral = [&](double z) { return resonant_excited(mol, cav, z, opts).chiral; };
    auto electric = [&](double z) { return resonant_excited(mol, cav, z, opts).electric; };
    const double lo = 0.25 * lambda, hi = r.width - 0.25 * lambda;
    r.chiral_amplitude = max_abs(chiral, lo, hi, blk.samples);
    r.electric_amplitude = max_abs(electric, lo, hi, blk.samples);
    const auto mid = resonant_excited(mol, cav, 0.5 * r.width, opts);
    r.chiral_at_center = mid.chiral;
    r.electric_at_center = mid.electric;
  });
  return rows;
}

CommandResult cmd_enhancement(const ScenarioConfig& c, int workers) {
  const auto rows = enhancement_table(c, workers);
  std::string csv = "nu,a_m,chiral_amplitude_J,electric_amplitude_J,chiral_at_center_J,electric_at_center_J\n";
  char buf[256];
  std::size_t best_c = 0, best_e = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.nu, r.width, r.chiral_amplitude,
                  r.electric_amplitude, r.chiral_at_center, r.electric_at_center);
    csv += buf;
    if (r.chiral_amplitude > rows[best_c].chiral_amplitude) best_c = i;
    if (r.electric_amplitude > rows[best_e].electric_amplitude) best_e = i;
  }
  const MoleculeSpec mol = c.molecule_spec();
  json summary = {{"command", "enhancement"},
                  {"molecule", mol.name},
                  {"wavelength_m", mol.wavelength()},
                  {"window", "[lambda/4, a - lambda/4]"},
                  {"chiral_peak_nu", rows[best_c].nu},
                  {"electric_peak_nu", rows[best_e].nu}};
  CommandResult out;
  out.files.push_back({"enhancement.csv", csv});
  out.summary = summary.dump(2) + "\n";
  out.files.push_back({"summary.json", out.summary});
  return out;
}

EnsemblePair ensemble_pair(const ScenarioConfig& c, int workers, bool keep_history) {
  const MoleculeSpec base = c.molecule_spec();
  const CavitySpec cav = c.cavity_spec();
  const DriveSpec drive = c.drive_spec();
  const PotentialOptions opts = c.potential_options();
  const int n_grid = c.ensemble ? c.ensemble->grid_points : 4000;

  auto run = [&](Enantiomer e) {
    MoleculeSpec m = base;
    m.rotatory_R01_over_c = sign_of(e) * std::abs(base.rotatory_R01_over_c);
    const auto field = dynamics::ForceField::build(m, cav, drive, opts, n_grid, workers);
    return dynamics::run_ensemble(c.ensemble_spec(e), field, m.mass, cav, workers, keep_history);
  };
  EnsemblePair p{run(Enantiomer::positive), run(Enantiomer::negative), {}};
  p.separation = dynamics::separation_report(p.positive.stats, p.negative.stats);
  return p;
}

CommandResult cmd_ensemble(const ScenarioConfig& c, int workers) {
  const bool traj = c.ensemble && c.ensemble->write_trajectories;
  const auto pair = ensemble_pair(c, workers, traj);
  const MoleculeSpec mol = c.molecule_spec();
  const DriveSpec drive = c.drive_spec();
  const Populations pops = time_averaged_populations(drive.rabi_frequency(mol), drive.detuning_delta);

  CommandResult out;
  out.files.push_back({"records_positive.csv", records_csv(pair.positive)});
  out.files.push_back({"records_negative.csv", records_csv(pair.negative)});
  if (traj) {
    out.files.push_back({"trajectories_positive.csv", pair.positive.trajectories_csv()});
    out.files.push_back({"trajectories_negative.csv", pair.negative.trajectories_csv()});
  }
  const auto& spec = pair.positive.stats.spec;
  json summary = {{"command", "ensemble"},
                  {"molecule", mol.name},
                  {"rabi_frequency_per_s", drive.rabi_frequency(mol)},
                  {"populations", populations_json(pops)},
                  {"ensemble",
                   {{"n_molecules", spec.n_molecules},
                    {"z0_m", spec.z0},
                    {"v_mean_m_per_s", spec.v_mean},
                    {"v_sigma_m_per_s", spec.v_sigma},
                    {"seed", spec.rng_seed},
                    {"t_max_s", spec.t_max}}},
                  {"positive", stats_json(pair.positive.stats)},
                  {"negative", stats_json(pair.negative.stats)},
                  {"separation",
                   {{"mirror_A", excess_json(pair.separation.mirror_A)},
                    {"mirror_B", excess_json(pair.separation.mirror_B)}}}};
  out.summary = summary.dump(2) + "\n";
  out.files.push_back({"summary.json", out.summary});
  return out;
}

CommandResult cmd_barrier(const ScenarioConfig& c, int workers) {
  const MoleculeSpec mol = c.molecule_spec();
  const DriveSpec drive = c.drive_spec();
  json reports = json::array();
  for (MirrorSide s : barrier_sides(c)) {
    reports.push_back(barrier_json(barrier_report(mol, c.cavity_spec(), drive, s, c.potential_options(), workers)));
  }
  json summary = {{"command", "barrier"},
                  {"molecule", mol.name},
                  {"rabi_frequency_per_s", drive.rabi_frequency(mol)},
                  {"populations",
                   populations_json(time_averaged_populations(drive.rabi_frequency(mol), drive.detuning_delta))},
                  {"barriers", reports}};
  CommandResult out;
  out.summary = summary.dump(2) + "\n";
  out.files.push_back({"summary.json", out.summary});
  return out;
}

CommandResult run_command(const std::string& command, ScenarioConfig config, const RunOptions& opts) {
  using Clock = std::chrono::steady_clock;
  static const std::map<std::string, CommandResult (*)(const ScenarioConfig&, int)> table = {
      {"potential", &cmd_potential},
      {"enhancement", &cmd_enhancement},
      {"ensemble", &cmd_ensemble},
      {"barrier", &cmd_barrier}};
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("command: unknown command '" + command + "'");
  if (opts.workers < 1) throw ConfigError("--workers: must be >= 1");
  if (command == "ensemble" && !config.ensemble) config.ensemble = EnsembleBlock{};
  if (opts.seed) {
    if (!config.ensemble) throw ConfigError("--seed: the scenario has no ensemble block");
    config.ensemble->seed = *opts.seed;
  }
  config.validate();

  const std::string started = utc_now();
  const auto t0 = Clock::now();
  CommandResult result = it->second(config, opts.workers);
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();

  const std::string echo = to_json(config);
  result.files.insert(result.files.begin(), OutputFile{"config.json", echo});

  namespace fs = std::filesystem;
  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.version = CHIRALCP_VERSION_STRING;
  manifest.command = command;
  manifest.config_digest = sha256_hex(echo);
  if (command == "ensemble") manifest.seed = config.ensemble->seed;
  manifest.workers = opts.workers;
  manifest.started_utc = started;
  manifest.wall_clock_s = wall;
  for (const auto& f : result.files) {
    std::ofstream os(dir / f.name, std::ios::binary);
    os << f.content;
    if (!os) throw std::runtime_error("cannot write " + (dir / f.name).string());
    manifest.outputs[f.name] = sha256_hex(f.content);
  }
  std::ofstream ms(dir / "manifest.json", std::ios::binary);
  ms << manifest.to_json();
  if (!ms) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  return result;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e)) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  if (const auto* ce = dynamic_cast<const ConvergenceError*>(&e)) {
    std::fprintf(stderr, "numerical error: %s (error estimate %.3g)\n", e.what(), ce->error_estimate());
    return kExitNumerical;
  }
  if (dynamic_cast<const dynamics::IntegrationError*>(&e)) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
  std::fprintf(stderr, "error: %s\n", e.what());
  return 1;
}

}  // namespace chiralcp::cli
