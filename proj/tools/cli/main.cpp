#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "chiralcp_cli/commands.hpp"
#include "chiralcp_cli/config.hpp"

using namespace chiralcp;

int main(int argc, char** argv) {
  CLI::App app{"chiralcp: Casimir-Polder potentials and enantiomer separation in a chiral cavity"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;

  auto add_run = [&](const std::string& name, const std::string& help) {
    auto* sc = app.add_subcommand(name, help);
    auto* c = sc->add_option("--config", config_path, "scenario file (JSON)")->check(CLI::ExistingFile);
    auto* p = sc->add_option("--preset", preset, "shipped scenario preset");
    c->excludes(p);
    sc->add_option("--seed", seed, "override ensemble.seed");
    sc->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sc->add_option("--out", out_dir, "output directory");
    return sc;
  };
  std::vector<CLI::App*> runs = {add_run("potential", "potential curves (CSV)"),
                                 add_run("enhancement", "resonant amplitudes versus cavity width"),
                                 add_run("ensemble", "trajectory ensembles for both enantiomers"),
                                 add_run("barrier", "barrier heights and threshold speeds")};

  auto* presets = app.add_subcommand("presets", "shipped scenario presets");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "list preset names");
  std::string show_name;
  auto* show = presets->add_subcommand("show", "print a preset as canonical JSON");
  show->add_option("name", show_name)->required();

  auto* echo = app.add_subcommand("config", "print the canonical form of a scenario");
  echo->add_option("--config", config_path)->check(CLI::ExistingFile);
  echo->add_option("--preset", preset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  try {
    auto load = [&] {
      if (config_path.empty() == preset.empty()) throw cli::ConfigError("give exactly one of --config or --preset");
      return config_path.empty() ? cli::load_preset(preset) : cli::load_config(config_path);
    };
    if (*list) {
      for (const auto& p : cli::list_presets()) std::printf("%-8s %-12s %s\n", p.name.c_str(), p.command.c_str(), p.description.c_str());
      return cli::kExitOk;
    }
    if (*show) {
      std::cout << cli::to_json(cli::load_preset(show_name));
      return cli::kExitOk;
    }
    if (*echo) {
      std::cout << cli::to_json(load());
      return cli::kExitOk;
    }
    for (auto* sc : runs) {
      if (!*sc) continue;
      cli::RunOptions opts;
      opts.out_dir = out_dir;
      opts.workers = workers;
      if (sc->count("--seed")) opts.seed = seed;
      const auto result = cli::run_command(sc->get_name(), load(), opts);
      std::cout << result.summary;
      std::fprintf(stderr, "wrote %zu files and manifest.json to %s\n", result.files.size(), out_dir.c_str());
    }
    return cli::kExitOk;
  } catch (const std::exception& e) {
    return cli::exit_code_for(e);
  }
}
