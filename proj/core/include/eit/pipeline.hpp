#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eit/forward.hpp"
#include "eit/inverse.hpp"
#include "eit/mesh.hpp"
#include "eit/metrics.hpp"
#include "eit/phantom.hpp"

namespace eit {

/// Invalid or inconsistent pipeline configuration. what() names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  // [mesh]
  double radius = 0.1;
  std::size_t forward_elements = 4096;
  std::size_t inverse_elements = 1024;
  // [electrodes]
  int electrodes = 16;
  /// Injected current in mA; potentials and voltages come out in mV.
  double current_ma = 1.0;
  // [phantom]
  int phantom_model = 7;
  std::optional<std::filesystem::path> phantom_file;
  double sigma0 = 1.0;
  // [noise]
  double snr_db = 50.0;
  std::uint64_t seed = 42;
  // [solver]
  Regularizer method = Regularizer::kNwatv;
  SolverConfig solver;
  /// Mask elements whose centroid lies within this radius; 0 disables.
  double mask_radius = 0.0;
  // [output]
  std::filesystem::path output_dir = "out";
  int resolution = 256;
  std::vector<ProfileLine> profiles;
  // [sweep]
  std::vector<double> sweep_lambda_over_rho;
  std::vector<double> sweep_delta;
  unsigned workers = 0;  // 0 = hardware concurrency


  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses the INI configuration text; relative paths resolve against
/// base_dir. Unset keys keep their defaults.
PipelineConfig parse_config(const std::string& text,
                            const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
std::string format_config(const PipelineConfig& config);

/// Meshes, electrodes and phantom for one run. The forward mesh carries
/// its electrodes at the angles chosen on the inversion mesh.
struct Scene {
  TriMesh inverse_mesh;
  ElectrodeLayout inverse_layout;
  TriMesh forward_mesh;
  ElectrodeLayout forward_layout;
  PhantomSpec phantom;
};

Scene build_scene(const PipelineConfig& config);

struct Simulation {
  VoltageFrame reference;
  VoltageFrame perturbed;
  /// Signed difference, the datum of S ds = dV.
  Eigen::VectorXd delta_v;
  Eigen::VectorXd noisy_delta_v;
  /// Phantom on the inversion mesh (total conductivity).
  Eigen::VectorXd truth;
};

Simulation simulate(const PipelineConfig& config, const Scene& scene);

/// Inversion-side operators built from the configuration.
struct InverseModel {
  SensitivityMatrix sensitivity;
  DifferenceOperators ops;
  double assembly_ms = 0.0;
  double sensitivity_ms = 0.0;
};

InverseModel build_inverse_model(const PipelineConfig& config, const Scene& scene);

/// Solver config with mask / boundary elements resolved against the mesh.
SolverConfig resolved_solver_config(const PipelineConfig& config,
                                    const TriMesh& inverse_mesh);

/// RE / PSNR of sigma0 + ds_n against a total-conductivity reference, both
/// rasterised on the inversion mesh at config.resolution.
EvalReport evaluate_history(const PipelineConfig& config, const TriMesh& mesh,
                            const std::vector<Eigen::VectorXd>& delta_history,
                            const Eigen::VectorXd& reference);

struct SweepCell {
  std::size_t index = 0;
  double lambda_over_rho = 0.0;
  double delta = 0.0;
  double re = 0.0;
  double psnr = 0.0;
  int iterations = 0;
  std::string error;  // empty on success
};

/// One reconstruction per (lambda/rho, delta) cell, run on a worker pool.
/// Cells come back ordered by index (lambda-major).
std::vector<SweepCell> run_sweep(const PipelineConfig& config,
                                 const Scene& scene, const InverseModel& model,
                                 const Eigen::VectorXd& delta_v,
                                 const Eigen::VectorXd& truth);

// Commands behind the CLI verbs. Each writes into config.output_dir and
// returns the paths it wrote.
std::vector<std::filesystem::path> cmd_mesh(const PipelineConfig& config);
std::vector<std::filesystem::path> cmd_simulate(const PipelineConfig& config);

struct ReconstructOutcome {
  std::vector<ReconResult> results;  // one per frame
  std::vector<std::filesystem::path> files;
};

ReconstructOutcome cmd_reconstruct(const PipelineConfig& config,
                                   const std::filesystem::path& voltage_file);

/// reference is either an element-value file of total conductivity or a
/// reconstruction output directory, whose final field is used as the
/// reference (surrogate metrics). Nothing is written if an input is missing.
std::vector<std::filesystem::path> cmd_evaluate(
    const PipelineConfig& config, const std::filesystem::path& result_dir,
    const std::filesystem::path& reference);

std::vector<std::filesystem::path> cmd_sweep(const PipelineConfig& config);

/// Rasterises an element-value file on the inversion mesh to PGM + sidecar.
std::vector<std::filesystem::path> cmd_render(
    const PipelineConfig& config, const std::filesystem::path& field_file,
    bool add_sigma0);

}  // namespace eit
