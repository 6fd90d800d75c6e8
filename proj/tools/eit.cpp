#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eit/io.hpp"
#include "eit/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

void report(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cout << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EIT reconstruction pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--seed", seed, "noise seed (overrides config)");
  app.add_option("--out", out_dir, "output directory (overrides config)");

  auto* mesh = app.add_subcommand("mesh", "write the forward and inversion meshes");
  auto* simulate = app.add_subcommand("simulate", "forward-simulate reference, perturbed and noisy difference frames");

  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct a conductivity change");
  std::string voltage_file;
  reconstruct->add_option("input", voltage_file, "voltage difference file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "RE / PSNR / profiles of a reconstruction");
  std::string result_dir;
  std::string reference;
  evaluate->add_option("result", result_dir, "reconstruction output directory")->required();
  evaluate->add_option("reference", reference,
                       "total-conductivity element file or a reconstruction directory")
      ->required();

  auto* sweep = app.add_subcommand("sweep", "grid over lambda/rho and delta");

  auto* render = app.add_subcommand("render", "rasterise an element-value file to PGM");
  std::string field_file;
  bool add_sigma0 = false;
  render->add_option("field", field_file, "element-value file")->required();
  render->add_flag("--add-sigma0", add_sigma0, "treat the file as a change and add sigma0");

  CLI11_PARSE(app, argc, argv);

  eit::PipelineConfig config;
  try {
    if (!config_path.empty()) config = eit::load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    config.validate();
  } catch (const eit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*mesh) {
      report(eit::cmd_mesh(config));
    } else if (*simulate) {
      report(eit::cmd_simulate(config));
    } else if (*reconstruct) {
      const auto outcome = eit::cmd_reconstruct(config, voltage_file);
      report(outcome.files);
      for (std::size_t t = 0; t < outcome.results.size(); ++t) {
        const auto& r = outcome.results[t];
        std::cerr << "frame " << t << ": " << eit::to_string(r.termination) << " after "
                  << r.diagnostics.size() << " iteration(s)\n";
      }
    } else if (*evaluate) {
      report(eit::cmd_evaluate(config, result_dir, reference));
    } else if (*sweep) {
      report(eit::cmd_sweep(config));
    } else if (*render) {
      report(eit::cmd_render(config, field_file, add_sigma0));
    }
  } catch (const eit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const eit::io::FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const eit::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
