#include "krasovskii/config.hpp"
#include "krasovskii/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Stability certification and probing for retarded delay equations"};
  app.require_subcommand(1);

  std::string run_config;
  std::string out_dir;
  CLI::App* run = app.add_subcommand("run", "Execute the task described by a config file");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory for report.json and CSVs")->required();

  std::string validate_config;
  CLI::App* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", validate_config, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return krasovskii::kExitInvalid;
  }

  if (*run) return krasovskii::run_config_file(run_config, out_dir, std::cout, std::cerr);

  const auto diagnostics = krasovskii::validate_config(validate_config);
  for (const auto& d : diagnostics) std::cout << validate_config << ": " << d.to_string() << "\n";
  if (diagnostics.empty()) std::cout << validate_config << ": ok\n";
  return diagnostics.empty() ? krasovskii::kExitPass : krasovskii::kExitInvalid;
}
