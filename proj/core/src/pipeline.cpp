#include "eit/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "eit/io.hpp"

namespace eit {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Element index under every pixel centre, computed once per mesh/resolution.
class PixelMap {
 public:
  PixelMap(const TriMesh& mesh, int resolution) {
    image_.width = resolution;
    image_.height = resolution;
    image_.extent = mesh.max_node_radius();
    element_.assign(static_cast<std::size_t>(resolution) * resolution, -1);
    const TriangleLocator locator(mesh);
    for (int r = 0; r < resolution; ++r) {
      for (int c = 0; c < resolution; ++c) {
        if (auto k = locator.locate(image_.pixel_center(r, c))) {
          element_[static_cast<std::size_t>(r) * resolution + c] = *k;
        }
      }
    }
  }

  Image render(const Eigen::VectorXd& values) const {
    Image img = image_;
    img.pixels.resize(element_.size());
    for (std::size_t i = 0; i < element_.size(); ++i) {
      img.pixels[i] = element_[i] < 0 ? kOutsideDomain : values[element_[i]];
    }
    return img;
  }

 private:
  Image image_;
  std::vector<int> element_;
};

PhantomSpec load_phantom(const PipelineConfig& config) {
  if (!config.phantom_file) return lung_model(config.phantom_model);
  std::istringstream in(io::read_file(*config.phantom_file));
  PhantomSpec spec = io::read_phantom(in);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("phantom.file: " + std::string(e.what()));
  }
  return spec;
}

template <typename F>
void write_text(const fs::path& path, std::vector<fs::path>& written, F&& body) {
  std::ostringstream os;
  body(os);
  io::write_file(path, os.str());
  written.push_back(path);
}

void write_history(std::ostream& os, const std::vector<Eigen::VectorXd>& history) {
  os << history.size() << '\n';
  for (const auto& v : history) io::write_element_values(os, v);
}

std::vector<Eigen::VectorXd> read_history(std::istream& is) {
  std::string line;
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!(ls >> count)) throw io::FormatError("history: bad iterate count");
    break;
  }
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(io::read_element_values(is));
  return out;
}

Eigen::VectorXd read_values_file(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  return io::read_element_values(in);
}

}  // namespace

Scene build_scene(const PipelineConfig& config) {
  Scene scene;
  scene.inverse_mesh = generate_disk_mesh(config.radius, config.inverse_elements);
  scene.inverse_layout = place_electrodes(scene.inverse_mesh, config.electrodes);
  scene.forward_mesh = generate_disk_mesh(config.radius, config.forward_elements);
  scene.forward_layout = place_electrodes_at(scene.forward_mesh, scene.inverse_layout.angles);
  scene.phantom = load_phantom(config);
  return scene;
}

Simulation simulate(const PipelineConfig& config, const Scene& scene) {
  const double current = config.current_ma;
  const auto reference_sigma =
      ConductivityField::homogeneous(scene.forward_mesh.num_elements(), config.sigma0);
  const auto sigma = assign_conductivity(scene.forward_mesh, scene.phantom);

  Simulation sim;
  sim.reference = simulate_frame(scene.forward_mesh, reference_sigma,
                                 scene.forward_layout, current);
  sim.perturbed = simulate_frame(scene.forward_mesh, sigma, scene.forward_layout, current);
  sim.delta_v = signed_difference(sim.perturbed, sim.reference);
  sim.noisy_delta_v = add_noise(sim.delta_v, config.snr_db, config.seed);
  sim.truth = assign_conductivity(scene.inverse_mesh, scene.phantom).values();
  return sim;
}

InverseModel build_inverse_model(const PipelineConfig& config, const Scene& scene) {
  InverseModel model;
  auto t0 = Clock::now();
  model.ops = build_difference_operators(scene.inverse_mesh);
  model.assembly_ms = elapsed_ms(t0);
  t0 = Clock::now();
  model.sensitivity = sensitivity_matrix(
      scene.inverse_mesh, scene.inverse_layout,
      ConductivityField::homogeneous(scene.inverse_mesh.num_elements(), config.sigma0),
      config.current_ma);
  model.sensitivity_ms = elapsed_ms(t0);
  return model;
}

SolverConfig resolved_solver_config(const PipelineConfig& config,
                                    const TriMesh& inverse_mesh) {
  SolverConfig solver = config.solver;
  if (config.mask_radius > 0.0) {
    std::vector<int> mask;
    for (std::size_t k = 0; k < inverse_mesh.num_elements(); ++k) {
      if (inverse_mesh.centroids()[k].norm() <= config.mask_radius) {
        mask.push_back(static_cast<int>(k));
      }
    }
    solver.mask = std::move(mask);
  }
  if (solver.enable_preprocess) solver.boundary_elements = inverse_mesh.boundary_elements();
  return solver;
}

EvalReport evaluate_history(const PipelineConfig& config, const TriMesh& mesh,
                            const std::vector<Eigen::VectorXd>& delta_history,
                            const Eigen::VectorXd& reference) {
  if (reference.size() != static_cast<Eigen::Index>(mesh.num_elements())) {
    throw std::invalid_argument("reference has " + std::to_string(reference.size()) +
                                " values, mesh has " +
                                std::to_string(mesh.num_elements()) + " elements");
  }
  const PixelMap pixels(mesh, config.resolution);
  const Image truth = pixels.render(reference);
  EvalReport report;
  Image last;
  for (const auto& ds : delta_history) {
    if (ds.size() != reference.size()) {
      throw std::invalid_argument("iterate and reference sizes differ");
    }
    last = pixels.render(ds.array() + config.sigma0);
    report.re_per_iter.push_back(relative_error(last, truth));
    report.psnr_per_iter.push_back(psnr(last, truth));
  }
  if (!delta_history.empty()) {
    for (const auto& line : config.profiles) {
      report.profile_samples.push_back(profile(last, line));
    }
  }
  return report;
}

std::vector<SweepCell> run_sweep(const PipelineConfig& config, const Scene& scene,
                                 const InverseModel& model,
                                 const Eigen::VectorXd& delta_v,
                                 const Eigen::VectorXd& truth) {
  if (config.sweep_lambda_over_rho.empty() || config.sweep_delta.empty()) {
    throw ConfigError("sweep: lambda_over_rho and delta grids must be nonempty");
  }
  const SolverConfig base = resolved_solver_config(config, scene.inverse_mesh);
  std::optional<AdmmSolver> solver;
  if (config.method != Regularizer::kTikhonov) {
    solver.emplace(model.sensitivity.s, model.ops, base.rho);
  }
  const PixelMap pixels(scene.inverse_mesh, config.resolution);
  const Image truth_img = pixels.render(truth);

  std::vector<SweepCell> cells;
  for (double ratio : config.sweep_lambda_over_rho) {
    for (double delta : config.sweep_delta) {
      SweepCell cell;
      cell.index = cells.size();
      cell.lambda_over_rho = ratio;
      cell.delta = delta;
      cells.push_back(cell);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepCell& cell = cells[i];
      try {
        SolverConfig cfg = base;
        cfg.lambda = cell.lambda_over_rho * cfg.rho;
        cfg.delta = cell.delta;
        const ReconResult r =
            solver ? solver->run(config.method, delta_v, cfg)
                   : reconstruct(config.method, model.sensitivity.s, delta_v, model.ops, cfg);
        const Image img = pixels.render(r.field.array() + config.sigma0);
        cell.re = relative_error(img, truth_img);
        cell.psnr = psnr(img, truth_img);
        cell.iterations = static_cast<int>(r.diagnostics.size());
      } catch (const std::exception& e) {
        cell.error = e.what();
        cell.re = std::numeric_limits<double>::quiet_NaN();
        cell.psnr = std::numeric_limits<double>::quiet_NaN();
      }
    }
  };
  unsigned n_workers = config.workers ? config.workers : std::thread::hardware_concurrency();
  n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(cells.size())));
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  return cells;
}

std::vector<fs::path> cmd_mesh(const PipelineConfig& config) {
  config.validate();
  const Scene scene = build_scene(config);
  std::vector<fs::path> written;
  write_text(config.output_dir / "mesh_inverse.txt", written, [&](std::ostream& os) {
    io::write_mesh(os, scene.inverse_mesh, scene.inverse_layout);
  });
  write_text(config.output_dir / "mesh_forward.txt", written, [&](std::ostream& os) {
    io::write_mesh(os, scene.forward_mesh, scene.forward_layout);
  });
  return written;
}

std::vector<fs::path> cmd_simulate(const PipelineConfig& config) {
  config.validate();
  const Scene scene = build_scene(config);
  const Simulation sim = simulate(config, scene);
  const fs::path dir = config.output_dir;
  std::vector<fs::path> written;

  auto frame_of = [&](const Eigen::VectorXd& data) {
    VoltageFrame f;
    f.electrodes = config.electrodes;
    f.data = data;
    return f;
  };
  write_text(dir / "reference.volt", written,
             [&](std::ostream& os) { io::write_frames(os, {sim.reference}); });
  write_text(dir / "perturbed.volt", written,
             [&](std::ostream& os) { io::write_frames(os, {sim.perturbed}); });
  write_text(dir / "delta.volt", written,
             [&](std::ostream& os) { io::write_frames(os, {frame_of(sim.delta_v)}); });
  write_text(dir / "delta_noisy.volt", written, [&](std::ostream& os) {
    io::write_frames(os, {frame_of(sim.noisy_delta_v)});
  });
  write_text(dir / "truth.field", written,
             [&](std::ostream& os) { io::write_element_values(os, sim.truth); });
  write_text(dir / "mesh_inverse.txt", written, [&](std::ostream& os) {
    io::write_mesh(os, scene.inverse_mesh, scene.inverse_layout);
  });
  write_text(dir / "phantom.ini", written,
             [&](std::ostream& os) { io::write_phantom(os, scene.phantom); });

  nlohmann::ordered_json manifest;
  manifest["seed"] = config.seed;
  manifest["snr_db"] = std::isinf(config.snr_db) ? nlohmann::ordered_json("inf")
                                                  : nlohmann::ordered_json(config.snr_db);
  manifest["electrodes"] = config.electrodes;
  manifest["frame_length"] = sim.reference.data.size();
  manifest["current_ma"] = config.current_ma;
  manifest["voltage_unit"] = "mV";
  manifest["forward_elements"] = scene.forward_mesh.num_elements();
  manifest["inverse_elements"] = scene.inverse_mesh.num_elements();
  manifest["linearization_sign"] = kLinearizationSign;
  manifest["config"] = format_config(config);
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& p : written) files.push_back(p.filename().string());
  manifest["files"] = files;
  write_text(dir / "manifest.json", written,
             [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  return written;
}

ReconstructOutcome cmd_reconstruct(const PipelineConfig& config,
                                   const fs::path& voltage_file) {
  config.validate();
  std::vector<VoltageFrame> frames;
  {
    std::istringstream in(io::read_file(voltage_file));
    frames = io::read_frames(in);
  }
  for (const auto& f : frames) {
    if (f.electrodes != config.electrodes) {
      throw ConfigError("electrodes.count: voltage file has " +
                        std::to_string(f.electrodes) + " electrodes, config " +
                        std::to_string(config.electrodes));
    }
  }

  auto t0 = Clock::now();
  Scene scene;
  scene.inverse_mesh = generate_disk_mesh(config.radius, config.inverse_elements);
  scene.inverse_layout = place_electrodes(scene.inverse_mesh, config.electrodes);
  const double mesh_ms = elapsed_ms(t0);
  const InverseModel model = build_inverse_model(config, scene);
  const SolverConfig solver_cfg = resolved_solver_config(config, scene.inverse_mesh);

  ReconstructOutcome outcome;
  outcome.results.resize(frames.size());
  std::vector<std::string> errors(frames.size());
  t0 = Clock::now();
  std::optional<AdmmSolver> admm;
  if (config.method != Regularizer::kTikhonov) {
    admm.emplace(model.sensitivity.s, model.ops, solver_cfg.rho);
  }
  const double factor_ms = elapsed_ms(t0);

  // Frames are independent; fan out and keep results in frame order.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < frames.size(); i = next++) {
      try {
        outcome.results[i] =
            admm ? admm->run(config.method, frames[i].data, solver_cfg)
                 : reconstruct(config.method, model.sensitivity.s, frames[i].data,
                               model.ops, solver_cfg);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned n_workers = config.workers ? config.workers : std::thread::hardware_concurrency();
  n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(frames.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }

  const PixelMap pixels(scene.inverse_mesh, config.resolution);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const fs::path dir =
        frames.size() == 1 ? config.output_dir : config.output_dir / ("frame_" + std::to_string(t));
    if (!errors[t].empty()) {
      write_text(dir / "diagnostics.txt", outcome.files,
                 [&](std::ostream& os) { os << "solver failure: " << errors[t] << '\n'; });
      throw SolverError("frame " + std::to_string(t) + ": " + errors[t]);
    }
    const ReconResult& r = outcome.results[t];
    write_text(dir / "field.txt", outcome.files,
               [&](std::ostream& os) { io::write_element_values(os, r.field); });
    const Eigen::VectorXd total = r.field.array() + config.sigma0;
    write_text(dir / "conductivity.txt", outcome.files,
               [&](std::ostream& os) { io::write_element_values(os, total); });
    write_text(dir / "history.txt", outcome.files,
               [&](std::ostream& os) { write_history(os, r.history); });
    write_text(dir / "iterations.csv", outcome.files,
               [&](std::ostream& os) { io::write_iterations_csv(os, r); });
    double iter_ms = 0.0;
    for (const auto& d : r.diagnostics) iter_ms += d.wall_ms;
    write_text(dir / "timing.csv", outcome.files, [&](std::ostream& os) {
      os << "phase,ms\n"
         << "mesh," << io::format_double(mesh_ms) << '\n'
         << "assembly," << io::format_double(model.assembly_ms) << '\n'
         << "sensitivity," << io::format_double(model.sensitivity_ms) << '\n'
         << "factorization," << io::format_double(factor_ms) << '\n'
         << "iterations," << io::format_double(iter_ms) << '\n';
    });
    const Image img = pixels.render(total);
    double lo = 0.0;
    double hi = 0.0;
    write_text(dir / "image.pgm", outcome.files, [&](std::ostream& os) {
      std::tie(lo, hi) = io::write_pgm(os, img);
    });
    write_text(dir / "image.txt", outcome.files,
               [&](std::ostream& os) { io::write_pgm_sidecar(os, lo, hi); });
    write_text(dir / "termination.txt", outcome.files, [&](std::ostream& os) {
      os << to_string(r.termination) << ' ' << r.diagnostics.size() << '\n';
    });
  }
  return outcome;
}

std::vector<fs::path> cmd_evaluate(const PipelineConfig& config,
                                   const fs::path& result_dir,
                                   const fs::path& reference) {
  config.validate();
  const fs::path history_file = result_dir / "history.txt";
  if (!fs::exists(history_file)) {
    throw io::FormatError("missing reconstruction history " + history_file.string());
  }
  if (!fs::exists(reference)) {
    throw io::FormatError("missing reference " + reference.string());
  }
  std::vector<Eigen::VectorXd> history;
  {
    std::istringstream in(io::read_file(history_file));
    history = read_history(in);
  }
  Eigen::VectorXd ref;
  if (fs::is_directory(reference)) {
    const fs::path field = reference / "field.txt";
    if (!fs::exists(field)) throw io::FormatError("missing reference field " + field.string());
    ref = read_values_file(field).array() + config.sigma0;
  } else {
    ref = read_values_file(reference);
  }

  const TriMesh mesh = generate_disk_mesh(config.radius, config.inverse_elements);
  const EvalReport report = evaluate_history(config, mesh, history, ref);

  std::vector<fs::path> written;
  write_text(config.output_dir / "eval.csv", written,
             [&](std::ostream& os) { io::write_eval_csv(os, report); });
  if (!report.profile_samples.empty()) {
    write_text(config.output_dir / "profiles.csv", written, [&](std::ostream& os) {
      os << "sample";
      for (std::size_t p = 0; p < report.profile_samples.size(); ++p) os << ",profile" << p;
      os << '\n';
      std::size_t rows = 0;
      for (const auto& s : report.profile_samples) rows = std::max(rows, s.size());
      for (std::size_t i = 0; i < rows; ++i) {
        os << i;
        for (const auto& s : report.profile_samples) {
          os << ',';
          if (i < s.size()) os << (std::isnan(s[i]) ? std::string("nan") : io::format_double(s[i]));
        }
        os << '\n';
      }
    });
  }
  return written;
}

std::vector<fs::path> cmd_sweep(const PipelineConfig& config) {
  config.validate();
  const Scene scene = build_scene(config);
  const Simulation sim = simulate(config, scene);
  const InverseModel model = build_inverse_model(config, scene);
  const auto cells = run_sweep(config, scene, model, sim.noisy_delta_v, sim.truth);
  std::vector<fs::path> written;
  write_text(config.output_dir / "sweep.csv", written, [&](std::ostream& os) {
    os << "cell,lambda_over_rho,delta,re,psnr,iterations,status\n";
    for (const auto& c : cells) {
      os << c.index << ',' << io::format_double(c.lambda_over_rho) << ','
         << io::format_double(c.delta) << ',' << io::format_double(c.re) << ','
         << io::format_double(c.psnr) << ',' << c.iterations << ','
         << (c.error.empty() ? std::string("ok") : "error: " + c.error) << '\n';
    }
  });
  return written;
}

std::vector<fs::path> cmd_render(const PipelineConfig& config,
                                 const fs::path& field_file, bool add_sigma0) {
  config.validate();
  Eigen::VectorXd values = read_values_file(field_file);
  if (add_sigma0) values.array() += config.sigma0;
  const TriMesh mesh = generate_disk_mesh(config.radius, config.inverse_elements);
  const Image img = rasterize(mesh, std::span<const double>(values.data(), values.size()),
                              config.resolution);
  std::vector<fs::path> written;
  const fs::path stem = config.output_dir / field_file.stem();
  double lo = 0.0;
  double hi = 0.0;
  write_text(fs::path(stem.string() + ".pgm"), written,
             [&](std::ostream& os) { std::tie(lo, hi) = io::write_pgm(os, img); });
  write_text(fs::path(stem.string() + ".txt"), written,
             [&](std::ostream& os) { io::write_pgm_sidecar(os, lo, hi); });
  return written;
}

}  // namespace eit
