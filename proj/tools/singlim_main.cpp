#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "singlim/io.hpp"
#include "singlim/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pseudospectral laboratory for singular limits of stochastic "
               "evolution equations on the 2-torus"};
  app.set_version_flag("--version", singlim::kVersion);
  app.require_subcommand(1);

  singlim::CmdOptions opts;
  auto add_run_options = [&opts](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration")
        ->required();
    cmd->add_option("--out", opts.out_dir,
                    "output directory (overrides the config's output_dir)");
    cmd->add_option("--workers", opts.workers,
                    "worker threads (default: SINGLIM_WORKERS or hardware)");
    cmd->add_flag("--force", opts.force,
                  "overwrite an existing run directory");
  };

  CLI::App* simulate = app.add_subcommand(
      "simulate", "integrate one eps-model path and record norm tracks");
  add_run_options(simulate);
  CLI::App* study = app.add_subcommand(
      "study", "convergence / theorem / regimes study over an eps grid");
  add_run_options(study);
  CLI::App* renorm = app.add_subcommand(
      "renorm", "renormalization constants, series and C0 estimates");
  add_run_options(renorm);
  CLI::App* check =
      app.add_subcommand("check", "fast self-check of the numerical core");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  singlim::resolve_workers(opts);

  try {
    if (simulate->parsed()) return singlim::cmd_simulate(opts);
    if (study->parsed()) return singlim::cmd_study(opts);
    if (renorm->parsed()) return singlim::cmd_renorm(opts);
    if (check->parsed()) return singlim::cmd_check();
  } catch (const std::exception& e) {
    nlohmann::json j;
    j["error"] = "runtime";
    j["message"] = e.what();
    std::cerr << j.dump() << std::endl;
    return 1;
  }
  return 2;
}
