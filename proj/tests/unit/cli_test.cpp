#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "chiralcp/errors.hpp"
#include "chiralcp_cli/commands.hpp"
#include "chiralcp_cli/config.hpp"
#include "chiralcp_cli/manifest.hpp"
#include "json.hpp"

using namespace chiralcp;
using namespace chiralcp::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chiralcp_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_exe(const std::string& args) {
  const std::string cmd = std::string(CHIRALCP_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small potential scenario used by several tests.
const char* kSmallPotential = R"({
  "name": "small",
  "command": "potential",
  "molecule": {"preset": "3MCP-eq"},
  "cavity": {"width": 0.001, "mirror_a": {"r_e": 0.05, "r_c": 0.8}, "mirror_b": {"r_e": 0.05, "r_c": 0.8}},
  "drive": {"intensity": 50000.0, "detuning": 628318.5307179586},
  "potential": {"z_grid": {"spacing": "log", "min": 1e-8, "max": 1e-6, "count": 6}}
})";

std::vector<std::vector<double>> csv_numbers(const std::string& csv) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

const std::string& file_named(const CommandResult& r, const std::string& name) {
  for (const auto& f : r.files) {
    if (f.name == name) return f.content;
  }
  throw std::runtime_error("missing output " + name);
}

}  // namespace

TEST(Config, RoundTripThroughCanonicalEcho) {
  for (const auto& p : list_presets()) {
    const auto c = load_preset(p.name);
    const auto again = parse_config(to_json(c));
    EXPECT_EQ(c, again) << p.name;
    EXPECT_EQ(to_json(c), to_json(again)) << p.name;
  }
}

TEST(Config, AllPresetsValidate) {
  const auto presets = list_presets();
  EXPECT_EQ(presets.size(), 8u);
  for (const auto& p : presets) {
    const auto c = load_preset(p.name);
    EXPECT_NO_THROW(c.validate()) << p.name;
    EXPECT_EQ(c.command, p.command);
    EXPECT_FALSE(p.description.empty());
  }
  EXPECT_THROW(load_preset("fig99"), ConfigError);
}

TEST(Config, UnknownKeyNamesItsPath) {
  auto j = json::parse(kSmallPotential);
  j["cavity"]["mirror_b"]["rx"] = 1.0;
  try {
    parse_config(j.dump());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cavity.mirror_b.rx"), std::string::npos) << e.what();
  }
}

TEST(Config, TypeAndRangeErrors) {
  auto j = json::parse(kSmallPotential);
  j["cavity"]["width"] = "wide";
  EXPECT_THROW(parse_config(j.dump()), ConfigError);
  j = json::parse(kSmallPotential);
  j["cavity"]["mirror_a"]["r_e"] = 0.9;  // passivity
  EXPECT_ANY_THROW(parse_config(j.dump()).validate());
  j = json::parse(kSmallPotential);
  j["molecule"]["dipole_d01"] = 1e-30;  // preset and explicit fields together
  EXPECT_THROW(parse_config(j.dump()), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
}

TEST(Config, NegativeEnantiomerFlipsRotatoryStrength) {
  auto j = json::parse(kSmallPotential);
  j["molecule"]["enantiomer"] = "negative";
  const auto c = parse_config(j.dump());
  EXPECT_LT(c.molecule_spec().rotatory_R01_over_c, 0.0);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.version = "0.3.0";
  m.command = "ensemble";
  m.config_digest = sha256_hex("x");
  m.seed = 42;
  m.outputs["a.csv"] = sha256_hex("");
  const auto back = RunManifest::from_json(m.to_json());
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.outputs, m.outputs);
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Run, ReproducibleOutputsAndManifest) {
  const auto c = load_preset("fig6b");
  const auto d1 = scratch("run1"), d2 = scratch("run2");
  run_command("ensemble", c, {d1.string(), 1, std::nullopt});
  run_command("ensemble", c, {d2.string(), 2, std::nullopt});
  for (const char* f : {"records_positive.csv", "records_negative.csv", "config.json", "summary.json"}) {
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  const auto m1 = RunManifest::from_json(slurp(d1 / "manifest.json"));
  const auto m2 = RunManifest::from_json(slurp(d2 / "manifest.json"));
  EXPECT_EQ(m1.config_digest, m2.config_digest);
  EXPECT_EQ(m1.config_digest, sha256_hex(slurp(d1 / "config.json")));
  EXPECT_EQ(m1.outputs, m2.outputs);
  EXPECT_EQ(m1.outputs.at("records_positive.csv"), sha256_hex(slurp(d1 / "records_positive.csv")));
  EXPECT_EQ(m1.seed, 1u);
  EXPECT_EQ(m2.workers, 2);
}

TEST(Run, SeedOverrideIsRecorded) {
  auto j = json::parse(kSmallPotential);
  j["command"] = "ensemble";
  j.erase("potential");
  j["ensemble"] = {{"n_molecules", 4}, {"v_sigma", 4e-4}, {"t_max", 0.05}, {"grid_points", 400}};
  const auto c = parse_config(j.dump());
  const auto d = scratch("seed");
  run_command("ensemble", c, {d.string(), 1, 17});
  EXPECT_EQ(RunManifest::from_json(slurp(d / "manifest.json")).seed, 17u);
  EXPECT_EQ(parse_config(slurp(d / "config.json")).ensemble->seed, 17u);
}

TEST(Commands, ZeroMirrorsGiveZeroColumns) {
  auto j = json::parse(kSmallPotential);
  j["cavity"]["mirror_a"] = {{"r_e", 0.0}, {"r_c", 0.0}};
  j["cavity"]["mirror_b"] = {{"r_e", 0.0}, {"r_c", 0.0}};
  const auto r = cmd_potential(parse_config(j.dump()), 1);
  const auto rows = csv_numbers(file_named(r, "potential.csv"));
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& row : rows) {
    for (std::size_t i = 1; i < row.size(); ++i) EXPECT_EQ(row[i], 0.0);
  }
}

TEST(Commands, AchiralMirrorsGiveZeroChiralEnhancement) {
  auto c = load_preset("fig3");
  c.cavity.mirror_a.r_c = c.cavity.mirror_b.r_c = 0.0;
  c.enhancement->nu_max = 4;
  c.enhancement->samples = 60;
  const auto rows = enhancement_table(c, 1);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.chiral_amplitude, 0.0);
    EXPECT_GT(r.electric_amplitude, 0.0);
  }
}

TEST(Commands, UndrivenMoleculesAtRestStayInFlight) {
  auto j = json::parse(kSmallPotential);
  j["command"] = "ensemble";
  j.erase("potential");
  j["drive"] = json::object();
  j["ensemble"] = {{"initial_velocities", {0.0}}, {"t_max", 0.5}, {"grid_points", 400}};
  const auto pair = ensemble_pair(parse_config(j.dump()), 1, false);
  EXPECT_EQ(pair.positive.stats.n_in_flight, 1);
  EXPECT_EQ(pair.negative.stats.n_in_flight, 1);
}

TEST(Commands, AchiralBarrierIsSymmetric) {
  auto c = load_preset("fig5");
  c.cavity.mirror_a.r_c = c.cavity.mirror_b.r_c = 0.0;
  const auto r = cmd_barrier(c, 1);
  const auto s = json::parse(r.summary);
  for (const auto& b : s.at("barriers")) {
    EXPECT_EQ(b.at("V_plus_J").get<double>(), b.at("V_minus_J").get<double>());
    EXPECT_TRUE(b.at("repelled").is_null());
  }

  c.drive.intensity.reset();
  c.drive.rabi_omega.reset();
  const auto u = json::parse(cmd_barrier(c, 1).summary);
  for (const auto& b : u.at("barriers")) EXPECT_TRUE(b.at("barrierless").get<bool>());
}

TEST(Executable, ExitCodes) {
  EXPECT_EQ(run_exe("--help"), 0);
  EXPECT_EQ(run_exe("presets list"), 0);
  EXPECT_EQ(run_exe("presets show fig2"), 0);
  EXPECT_EQ(run_exe("potential --preset nope"), kExitConfig);
  EXPECT_EQ(run_exe("potential --bogus-flag"), kExitConfig);
  EXPECT_EQ(run_exe("potential --config /nonexistent/file.json"), kExitConfig);

  const auto dir = scratch("exe");
  fs::create_directories(dir);
  auto j = json::parse(kSmallPotential);
  j["cavity"]["mirror_b"]["rx"] = 1.0;
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_EQ(run_exe("potential --config " + (dir / "bad.json").string()), kExitConfig);

  std::ofstream(dir / "ok.json") << kSmallPotential;
  EXPECT_EQ(run_exe("potential --config " + (dir / "ok.json").string() + " --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "ok" / "potential.csv"));
}

// No shipped tolerance drives the quadrature past its roundoff floor, so the
// numerical branch of the mapping is checked directly.
TEST(Executable, ExceptionMapping) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), kExitConfig);
  EXPECT_EQ(exit_code_for(DomainError("x")), kExitConfig);
  EXPECT_EQ(exit_code_for(ValidationError("x")), kExitConfig);
  EXPECT_EQ(exit_code_for(ConvergenceError("x", {}, 1e-3)), kExitNumerical);
  EXPECT_EQ(exit_code_for(dynamics::IntegrationError("x", {})), kExitNumerical);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}
