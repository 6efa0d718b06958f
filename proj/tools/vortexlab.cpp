// vortexlab check|solve|oracle-compare --config <file.json> [--out <dir>] [--emit-fields] [--emit-profiles]

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "vortexlab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Double-layer Chern-Simons vortex solver"};
  app.require_subcommand(1);

  struct Options {
    std::string config;
    std::string out;
    bool emit_fields = false;
    bool emit_profiles = false;
  } opt;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", opt.out, "Output directory (overrides output_dir)");
    sub->add_flag("--emit-fields", opt.emit_fields, "Write u1.fld, u2.fld and B12.fld");
    sub->add_flag("--emit-profiles", opt.emit_profiles, "Write radial_profile.csv");
    return sub;
  };
  CLI::App* check = add("check", "Existence test on a torus cell; writes admissibility.json");
  CLI::App* solve = add("solve", "Solve and write report.json");
  CLI::App* oracle = add("oracle-compare", "Solve on the plane and compare with the radial 1D solution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  vortexlab::RunMode mode = vortexlab::RunMode::Solve;
  if (check->parsed()) mode = vortexlab::RunMode::Check;
  if (solve->parsed()) mode = vortexlab::RunMode::Solve;
  if (oracle->parsed()) mode = vortexlab::RunMode::OracleCompare;

  std::optional<std::string> out;
  if (!opt.out.empty()) out = opt.out;
  return vortexlab::run_command(mode, opt.config, out, opt.emit_fields, opt.emit_profiles, std::cerr);
}
