#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ampvp/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNumericalFailure = 1;
constexpr int kConfigError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-profile AMP and Lotka-Volterra experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON config file")->required();

  std::string results_path;
  std::string plot_kind = "trend";
  std::string plot_out;
  auto* plot = app.add_subcommand("plotdata", "derive plot-ready rows");
  plot->add_option("results", results_path, "results.csv from a run")
      ->required();
  plot->add_option("--kind", plot_kind, "trend | histogram");
  plot->add_option("--out", plot_out, "output csv (default alongside input)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("config", validate_path, "JSON config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ampvp::ExperimentConfig cfg =
          ampvp::config_from_json_file(config_path);
      const int rc = ampvp::run_experiment(cfg);
      if (rc != 0) {
        std::cerr << "run: numerical failures recorded in manifest.json\n";
        return kNumericalFailure;
      }
      std::cout << "wrote " << cfg.output_dir << "/results.csv\n";
      return kOk;
    }
    if (plot->parsed()) {
      if (plot_out.empty())
        plot_out = (std::filesystem::path(results_path).parent_path() /
                    ("plot_" + plot_kind + ".csv"))
                       .string();
      ampvp::emit_plotdata(results_path, plot_kind, plot_out);
      std::cout << "wrote " << plot_out << "\n";
      return kOk;
    }
    const ampvp::ExperimentConfig cfg =
        ampvp::config_from_json_file(validate_path);
    std::cout << ampvp::config_to_json_text(cfg) << "\n";
    return kOk;
  } catch (const ampvp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}
