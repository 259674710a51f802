// Command-line laboratory for average-reward stochastic games: runs the
// confidence-region learner over generated or stored models, executes the
// structural diagnostic suites, and writes grep-able CSV logs.

#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ucsg/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ucsg: two-player average-reward game laboratory"};
  app.require_subcommand(1);

  std::string run_config, run_out, run_mode;
  std::optional<uint64_t> run_seed;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", run_config, "experiment config (JSON)")
      ->required();
  run->add_option("--out", run_out, "output directory (overrides config)");
  run->add_option("--seed", run_seed, "single seed (overrides config list)");
  run->add_option("--mode", run_mode, "online|offline (overrides config)")
      ->check(CLI::IsMember({"online", "offline"}));

  std::string diag_config;
  CLI::App* diag = app.add_subcommand("diagnose", "run the structural checks");
  diag->add_option("--config", diag_config, "diagnostics config (JSON)")
      ->required();

  std::string gen_spec, gen_out;
  CLI::App* gen = app.add_subcommand("gen", "generate and store a model");
  gen->add_option("--spec", gen_spec, "generator spec (JSON)")->required();
  gen->add_option("--out", gen_out, "model file to write")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return ucsg::harness::cmd_run(run_config, run_out, run_seed, run_mode);
  if (diag->parsed()) return ucsg::harness::cmd_diagnose(diag_config);
  return ucsg::harness::cmd_gen(gen_spec, gen_out);
}
