#include "chiralcp_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "chiralcp/errors.hpp"
#include "json.hpp"

namespace chiralcp::cli {

using nlohmann::json;

namespace {

/// Walks one JSON object, remembering which keys were consumed so that the
/// leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const std::string& key, double& out) {
    if (auto* v = take(key)) out = number(*v, field(key));
  }
  void get(const std::string& key, std::optional<double>& out) {
    if (auto* v = take(key); v && !v->is_null()) out = number(*v, field(key));
  }
  void get(const std::string& key, int& out) {
    if (auto* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(field(key) + ": integer out of range");
      out = static_cast<int>(x);
    }
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (auto* v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(field(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (auto* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (auto* v = take(key)) {
      if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::optional<std::string>& out) {
    if (auto* v = take(key); v && !v->is_null()) {
      if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (auto* v = take(key)) {
      if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(number((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(field(k) + ": unknown key");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  static double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + ": must be finite");
    return x;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Enantiomer parse_enantiomer(const std::string& s, const std::string& where) {
  if (s == "positive") return Enantiomer::positive;
  if (s == "negative") return Enantiomer::negative;
  throw ConfigError(where + ": expected \"positive\" or \"negative\"");
}

const char* enantiomer_name(Enantiomer e) { return e == Enantiomer::positive ? "positive" : "negative"; }

MirrorBlock read_mirror(const json& j, const std::string& path) {
  Reader r(j, path);
  MirrorBlock m;
  r.get("r_e", m.r_e);
  r.get("r_c", m.r_c);
  r.finish();
  return m;
}

MoleculeBlock read_molecule(const json& j) {
  Reader r(j, "molecule");
  MoleculeBlock m;
  r.get("preset", m.preset);
  std::string e = "positive";
  r.get("enantiomer", e);
  m.enantiomer = parse_enantiomer(e, "molecule.enantiomer");
  if (m.preset) {
    for (const char* k : {"name", "dipole_d01", "rotatory_R01_over_c", "omega10", "mass"}) {
      if (r.has(k)) throw ConfigError(r.field(k) + ": not allowed together with molecule.preset");
    }
  } else {
    for (const char* k : {"dipole_d01", "rotatory_R01_over_c", "omega10", "mass"}) {
      if (!r.has(k)) throw ConfigError(r.field(k) + ": required when no preset is given");
    }
    r.get("name", m.name);
    r.get("dipole_d01", m.dipole_d01);
    r.get("rotatory_R01_over_c", m.rotatory_R01_over_c);
    r.get("omega10", m.omega10);
    r.get("mass", m.mass);
  }
  r.finish();
  return m;
}

ZGrid read_grid(const json& j, const std::string& path) {
  Reader r(j, path);
  ZGrid g;
  r.get("spacing", g.spacing);
  r.get("min", g.min);
  r.get("max", g.max);
  r.get("count", g.count);
  r.get("values", g.values);
  r.finish();
  return g;
}

ScenarioConfig from_json(const json& root) {
  Reader r(root, "");
  ScenarioConfig c;
  r.get("name", c.name);
  r.get("description", c.description);
  r.get("command", c.command);

  const json* mol = r.take("molecule");
  if (!mol) throw ConfigError("molecule: required");
  c.molecule = read_molecule(*mol);

  const json* cav = r.take("cavity");
  if (!cav) throw ConfigError("cavity: required");
  {
    Reader rc(*cav, "cavity");
    if (!rc.has("width")) throw ConfigError("cavity.width: required");
    rc.get("width", c.cavity.width);
    for (const char* side : {"mirror_a", "mirror_b"}) {
      const json* m = rc.take(side);
      if (!m) throw ConfigError(rc.field(side) + ": required");
      (std::string(side) == "mirror_a" ? c.cavity.mirror_a : c.cavity.mirror_b) = read_mirror(*m, rc.field(side));
    }
    rc.finish();
  }

  if (const json* d = r.take("drive")) {
    Reader rd(*d, "drive");
    rd.get("intensity", c.drive.intensity);
    rd.get("rabi_omega", c.drive.rabi_omega);
    rd.get("detuning", c.drive.detuning);
    rd.get("temperature", c.drive.temperature);
    rd.finish();
  }

  if (const json* n = r.take("numerics")) {
    Reader rn(*n, "numerics");
    rn.get("resummation", c.numerics.resummation);
    rn.get("z_min", c.numerics.z_min);
    rn.get("xi_rel_tol", c.numerics.xi_rel_tol);
    rn.get("greens_rel_tol", c.numerics.greens_rel_tol);
    rn.get("matsubara_rel_tol", c.numerics.matsubara_rel_tol);
    rn.finish();
  }

  if (const json* p = r.take("potential")) {
    Reader rp(*p, "potential");
    PotentialBlock b;
    if (const json* g = rp.take("z_grid")) b.z_grid = read_grid(*g, "potential.z_grid");
    rp.get("temperatures", b.temperatures);
    if (const json* ms = rp.take("mirror_sets")) {
      if (!ms->is_array()) throw ConfigError("potential.mirror_sets: expected an array");
      for (std::size_t i = 0; i < ms->size(); ++i) {
        b.mirror_sets.push_back(read_mirror((*ms)[i], "potential.mirror_sets[" + std::to_string(i) + "]"));
      }
    }
    rp.get("both_enantiomers", b.both_enantiomers);
    rp.get("barrier", b.barrier);
    rp.finish();
    c.potential = b;
  }

  if (const json* e = r.take("enhancement")) {
    Reader re(*e, "enhancement");
    EnhancementBlock b;
    re.get("nu_min", b.nu_min);
    re.get("nu_max", b.nu_max);
    re.get("samples", b.samples);
    re.finish();
    c.enhancement = b;
  }

  if (const json* e = r.take("ensemble")) {
    Reader re(*e, "ensemble");
    EnsembleBlock b;
    re.get("initial_velocities", b.initial_velocities);
    if (!b.initial_velocities.empty()) b.n_molecules = static_cast<int>(b.initial_velocities.size());
    const bool has_n = re.has("n_molecules");
    re.get("n_molecules", b.n_molecules);
    if (has_n && !b.initial_velocities.empty() &&
        b.n_molecules != static_cast<int>(b.initial_velocities.size())) {
      throw ConfigError("ensemble.n_molecules: must equal the length of ensemble.initial_velocities");
    }
    re.get("z0", b.z0);
    re.get("v_mean", b.v_mean);
    re.get("v_sigma", b.v_sigma);
    re.get("seed", b.seed);
    re.get("t_max", b.t_max);
    re.get("grid_points", b.grid_points);
    re.get("write_trajectories", b.write_trajectories);
    re.finish();
    c.ensemble = b;
  }

  if (const json* b = r.take("barrier")) {
    Reader rb(*b, "barrier");
    BarrierBlock blk;
    rb.get("side", blk.side);
    rb.finish();
    c.barrier = blk;
  }

  r.finish();
  return c;
}

json mirror_json(const MirrorBlock& m) { return {{"r_e", m.r_e}, {"r_c", m.r_c}}; }

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::vector<double> ZGrid::resolve() const {
  if (!values.empty()) return values;
  if (spacing == "log") return log_grid(min, max, count);
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = min + (max - min) * i / (count - 1);
  return g;
}

MoleculeSpec ScenarioConfig::molecule_spec() const {
  MoleculeSpec m;
  if (molecule.preset) {
    m = molecule_preset(*molecule.preset, Enantiomer::positive);
  } else {
    m.name = molecule.name;
    m.dipole_d01 = molecule.dipole_d01;
    m.rotatory_R01_over_c = molecule.rotatory_R01_over_c;
    m.omega10 = molecule.omega10;
    m.mass = molecule.mass;
  }
  return molecule.enantiomer == Enantiomer::negative ? m.mirror_image() : m;
}

CavitySpec ScenarioConfig::cavity_spec() const {
  CavitySpec c;
  c.width_a = cavity.width;
  c.mirror_a = {cavity.mirror_a.r_e, cavity.mirror_a.r_c, MirrorSide::A};
  c.mirror_b = {cavity.mirror_b.r_e, cavity.mirror_b.r_c, MirrorSide::B};
  return c;
}

DriveSpec ScenarioConfig::drive_spec() const {
  DriveSpec d;
  d.intensity = drive.intensity;
  d.rabi_omega = drive.rabi_omega;
  if (!d.intensity && !d.rabi_omega) d.rabi_omega = 0.0;
  d.detuning_delta = drive.detuning;
  d.temperature = drive.temperature;
  return d;
}

PotentialOptions ScenarioConfig::potential_options() const {
  PotentialOptions o;
  o.z_min = numerics.z_min;
  o.xi_quadrature.rel_tol = numerics.xi_rel_tol;
  o.greens.quadrature.rel_tol = numerics.greens_rel_tol;
  o.matsubara.rel_tol = numerics.matsubara_rel_tol;
  if (numerics.resummation == "single_reflection") o.resummation = greens::Resummation::single_reflection;
  if (numerics.resummation == "full_series") o.resummation = greens::Resummation::full_series;
  if (numerics.resummation == "full_direct") o.resummation = greens::Resummation::full_direct;
  return o;
}

dynamics::EnsembleSpec ScenarioConfig::ensemble_spec(Enantiomer e) const {
  const EnsembleBlock b = ensemble.value_or(EnsembleBlock{});
  dynamics::EnsembleSpec s;
  s.n_molecules = b.n_molecules;
  s.z0 = b.z0;
  s.v_mean = b.v_mean;
  s.v_sigma = b.v_sigma;
  s.rng_seed = b.seed;
  s.t_max = b.t_max;
  s.enantiomer = e;
  s.initial_velocities = b.initial_velocities;
  return s;
}

void ScenarioConfig::validate() const {
  if (molecule.preset) {
    const auto names = molecule_preset_names();
    check(std::find(names.begin(), names.end(), *molecule.preset) != names.end(),
          "molecule.preset: unknown preset '" + *molecule.preset + "'");
  }
  const CavitySpec cav = cavity_spec();
  try {
    molecule_spec().validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  check(std::isfinite(cavity.width) && cavity.width > 0.0, "cavity.width: must be > 0");
  for (const auto& [name, m] : {std::pair{"cavity.mirror_a", cav.mirror_a}, std::pair{"cavity.mirror_b", cav.mirror_b}}) {
    try {
      m.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    }
  }
  check(!(drive.intensity && drive.rabi_omega), "drive: give intensity or rabi_omega, not both");
  try {
    drive_spec().validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  check(numerics.resummation == "auto" || numerics.resummation == "single_reflection" ||
            numerics.resummation == "full_series" || numerics.resummation == "full_direct",
        "numerics.resummation: expected auto, single_reflection, full_series or full_direct");
  check(numerics.z_min > 0.0 && numerics.z_min < 0.5 * cavity.width, "numerics.z_min: must lie in (0, width/2)");
  for (const auto& [name, tol] : {std::pair{"numerics.xi_rel_tol", numerics.xi_rel_tol},
                                  std::pair{"numerics.greens_rel_tol", numerics.greens_rel_tol},
                                  std::pair{"numerics.matsubara_rel_tol", numerics.matsubara_rel_tol}}) {
    check(tol > 0.0 && tol < 1.0, std::string(name) + ": must lie in (0, 1)");
  }

  if (potential) {
    const auto& g = potential->z_grid;
    if (g.values.empty()) {
      check(g.spacing == "log" || g.spacing == "linear", "potential.z_grid.spacing: expected log or linear");
      check(g.count >= 2, "potential.z_grid.count: must be >= 2");
      check(g.min > 0.0 && g.max > g.min && g.max < cavity.width,
            "potential.z_grid: need 0 < min < max < cavity.width");
    } else {
      for (double z : g.values) check(z > 0.0 && z < cavity.width, "potential.z_grid.values: entries must lie in (0, width)");
    }
    for (double T : potential->temperatures) check(T >= 0.0, "potential.temperatures: entries must be >= 0");
    for (std::size_t i = 0; i < potential->mirror_sets.size(); ++i) {
      const auto& m = potential->mirror_sets[i];
      try {
        MirrorSpec{m.r_e, m.r_c, MirrorSide::A}.validate();
      } catch (const DomainError& e) {
        throw ConfigError("potential.mirror_sets[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
  if (enhancement) {
    check(enhancement->nu_min >= 2 && enhancement->nu_max <= 20 && enhancement->nu_min <= enhancement->nu_max,
          "enhancement: need 2 <= nu_min <= nu_max <= 20");
    check(enhancement->samples >= 16, "enhancement.samples: must be >= 16");
  }
  if (ensemble) {
    try {
      ensemble_spec(Enantiomer::positive).validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    check(ensemble->z0 > numerics.z_min && ensemble->z0 < cavity.width - numerics.z_min,
          "ensemble.z0: must lie between the collection planes (z_min, width - z_min)");
    check(ensemble->grid_points >= 64, "ensemble.grid_points: must be >= 64");
  }
  if (barrier) {
    check(barrier->side == "A" || barrier->side == "B" || barrier->side == "both", "barrier.side: expected A, B or both");
  }
}

ScenarioConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(root);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["description"] = c.description;
  j["command"] = c.command;

  json mol;
  mol["enantiomer"] = enantiomer_name(c.molecule.enantiomer);
  if (c.molecule.preset) {
    mol["preset"] = *c.molecule.preset;
  } else {
    mol["name"] = c.molecule.name;
    mol["dipole_d01"] = c.molecule.dipole_d01;
    mol["rotatory_R01_over_c"] = c.molecule.rotatory_R01_over_c;
    mol["omega10"] = c.molecule.omega10;
    mol["mass"] = c.molecule.mass;
  }
  j["molecule"] = mol;
  j["cavity"] = {{"width", c.cavity.width}, {"mirror_a", mirror_json(c.cavity.mirror_a)},
                 {"mirror_b", mirror_json(c.cavity.mirror_b)}};

  json d = {{"detuning", c.drive.detuning}, {"temperature", c.drive.temperature}};
  if (c.drive.intensity) d["intensity"] = *c.drive.intensity;
  if (c.drive.rabi_omega) d["rabi_omega"] = *c.drive.rabi_omega;
  j["drive"] = d;

  j["numerics"] = {{"resummation", c.numerics.resummation},
                   {"z_min", c.numerics.z_min},
                   {"xi_rel_tol", c.numerics.xi_rel_tol},
                   {"greens_rel_tol", c.numerics.greens_rel_tol},
                   {"matsubara_rel_tol", c.numerics.matsubara_rel_tol}};

  if (c.potential) {
    const auto& p = *c.potential;
    json g = {{"spacing", p.z_grid.spacing},
              {"min", p.z_grid.min},
              {"max", p.z_grid.max},
              {"count", p.z_grid.count},
              {"values", p.z_grid.values}};
    json sets = json::array();
    for (const auto& m : p.mirror_sets) sets.push_back(mirror_json(m));
    j["potential"] = {{"z_grid", g},
                      {"temperatures", p.temperatures},
                      {"mirror_sets", sets},
                      {"both_enantiomers", p.both_enantiomers},
                      {"barrier", p.barrier}};
  }
  if (c.enhancement) {
    j["enhancement"] = {
        {"nu_min", c.enhancement->nu_min}, {"nu_max", c.enhancement->nu_max}, {"samples", c.enhancement->samples}};
  }
  if (c.ensemble) {
    const auto& e = *c.ensemble;
    j["ensemble"] = {{"n_molecules", e.n_molecules},
                     {"z0", e.z0},
                     {"v_mean", e.v_mean},
                     {"v_sigma", e.v_sigma},
                     {"seed", e.seed},
                     {"t_max", e.t_max},
                     {"initial_velocities", e.initial_velocities},
                     {"grid_points", e.grid_points},
                     {"write_trajectories", e.write_trajectories}};
  }
  if (c.barrier) j["barrier"] = {{"side", c.barrier->side}};
  return j.dump(2) + "\n";
}

}  // namespace chiralcp::cli
