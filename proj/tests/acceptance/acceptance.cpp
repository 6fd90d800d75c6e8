// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eit/forward.hpp"
#include "eit/inverse.hpp"
#include "eit/metrics.hpp"
#include "eit/phantom.hpp"
#include "eit/pipeline.hpp"
#include "oracles.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using namespace eit;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const std::string& id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = seconds_since(t0);
  if (!out.pass) ++failures;
  std::printf("%s criterion %s (%s): %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", id.c_str(),
              title.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// 1
Outcome forward_oracle(const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  auto error_at = [&](std::size_t target, std::size_t* elements) {
    const TriMesh mesh = generate_disk_mesh(cfg.radius, target);
    *elements = mesh.num_elements();
    const auto layout = oracle::quadrant_layout(mesh);
    const ForwardSolver solver(mesh, ConductivityField::homogeneous(mesh.num_elements(), 1.0), layout);
    const int src = layout.node_ids[0];
    const int snk = layout.node_ids[2];
    const Eigen::VectorXd u = solver.solve_point_injection(src, snk, 1.0);
    return oracle::compare_with_disk_green(mesh, u, src, snk, 1.0, 1.0,
                                           2.0 * mesh.max_boundary_edge_length())
        .relative_l2;
  };
  std::size_t coarse_n = 0;
  std::size_t fine_n = 0;
  const double coarse = error_at(4096, &coarse_n);
  const double fine = error_at(16384, &fine_n);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = fine_n >= 16000 && fine < 0.02 && fine < coarse && secs < 5.0;
  o.detail = fmt("L2 error %.4f%% at %zu elements, %.4f%% at %zu, %.2f s (limits 2%%, decreasing, 5 s)",
                 100.0 * fine, fine_n, 100.0 * coarse, coarse_n, secs);
  return o;
}

// 2
Outcome reciprocity_scaling(const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  const Scene scene = build_scene(cfg);
  const auto& mesh = scene.forward_mesh;
  double worst_recip = 0.0;
  double worst_scale = 0.0;
  for (const auto& sigma : {ConductivityField::homogeneous(mesh.num_elements(), 1.0),
                            assign_conductivity(mesh, scene.phantom)}) {
    const VoltageFrame v = simulate_frame(mesh, sigma, scene.forward_layout, cfg.current_ma);
    const double vmax = v.data.cwiseAbs().maxCoeff();
    for (const auto& [j, i] : neighbouring_protocol(cfg.electrodes)) {
      worst_recip = std::max(worst_recip, std::abs(v.at(j, i) - v.at(i, j)) / vmax);
    }
    for (double c : {0.5, 2.0, 10.0}) {
      const VoltageFrame vc =
          simulate_frame(mesh, ConductivityField(c * sigma.values()), scene.forward_layout, cfg.current_ma);
      worst_scale = std::max(worst_scale, (c * vc.data - v.data).norm() / v.data.norm());
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_recip <= 1e-8 && worst_scale <= 1e-10 && secs < 10.0;
  o.detail = fmt("reciprocity %.2e of max|V| (limit 1e-8), scaling %.2e (limit 1e-10), %.2f s (limit 10 s)",
                 worst_recip, worst_scale, secs);
  return o;
}

// 3
Outcome linearization(const PipelineConfig& cfg) {
  const Scene scene = build_scene(cfg);
  const Simulation sim = simulate(cfg, scene);
  const InverseModel model = build_inverse_model(cfg, scene);
  const Eigen::VectorXd ds = sim.truth.array() - cfg.sigma0;
  const double rel = (model.sensitivity.s * ds - sim.delta_v).norm() / sim.delta_v.norm();
  Outcome o;
  o.pass = rel < 0.15;
  o.detail = fmt("||S ds - dV|| / ||dV|| = %.2f%% (limit 15%%)", 100.0 * rel);
  return o;
}

// 4: brute force over F(v) = lambda p |v| + rho/2 (v - w)^2.
Outcome z_update_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uw(-0.05, 0.05);
  std::uniform_real_distribution<double> up(0.0, 2.0);
  std::uniform_real_distribution<double> ur(-6.0, -3.0);
  const double rho = 1e-10;
  const double step = 1e-6;
  double worst = 0.0;
  int nonzero = 0;
  for (int t = 0; t < 1000; ++t) {
    const double w = uw(rng);
    const double p = std::pow(10.0, up(rng));
    const double lambda = std::pow(10.0, ur(rng)) * rho;
    Eigen::VectorXd wv(1);
    Eigen::VectorXd pv(1);
    wv[0] = w;
    pv[0] = p;
    const double z = z_update(wv, pv, lambda, rho)[0];
    if (z != 0.0) ++nonzero;
    auto f = [&](double v) { return lambda * p * std::abs(v) + 0.5 * rho * (v - w) * (v - w); };
    const double lo = std::min(0.0, w) - step;
    const double hi = std::max(0.0, w) + step;
    const auto n = static_cast<long long>(std::ceil((hi - lo) / step));
    double best_v = 0.0;
    double best_f = f(0.0);
    for (long long i = 0; i <= n; ++i) {
      const double v = lo + static_cast<double>(i) * step;
      const double fv = f(v);
      if (fv < best_f) {
        best_f = fv;
        best_v = v;
      }
    }
    worst = std::max(worst, std::abs(z - best_v));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst <= step && secs < 5.0;
  o.detail = fmt("max |z - grid argmin| = %.2e over 1000 triples (%d nonzero), grid 1e-6, %.2f s (limit 5 s)",
                 worst, nonzero, secs);
  return o;
}

struct EndToEnd {
  Scene scene;
  Simulation sim;
  InverseModel model;
};

EndToEnd prepare(const PipelineConfig& cfg) {
  EndToEnd e;
  e.scene = build_scene(cfg);
  e.sim = simulate(cfg, e.scene);
  e.model = build_inverse_model(cfg, e.scene);
  return e;
}

// 5
Outcome reproduction(const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  const EndToEnd e = prepare(cfg);
  const SolverConfig base = resolved_solver_config(cfg, e.scene.inverse_mesh);
  const AdmmSolver solver(e.model.sensitivity.s, e.model.ops, base.rho);

  const ReconResult nw = solver.run(Regularizer::kNwatv, e.sim.noisy_delta_v, base);
  const EvalReport nw_eval = evaluate_history(cfg, e.scene.inverse_mesh, nw.history, e.sim.truth);
  const double re1 = nw_eval.re_per_iter.front();
  const double re_n = nw_eval.re_per_iter.back();

  // FOTV over a decade grid centred on the configured lambda.
  double best_fotv = std::numeric_limits<double>::infinity();
  double best_lambda = 0.0;
  for (double scale : {1e-2, 1e-1, 1.0, 1e1, 1e2}) {
    SolverConfig c = base;
    c.lambda = base.lambda * scale;
    const ReconResult fo = solver.run(Regularizer::kFotv, e.sim.noisy_delta_v, c);
    const double re = evaluate_history(cfg, e.scene.inverse_mesh, {fo.field}, e.sim.truth).re_per_iter[0];
    if (re < best_fotv) {
      best_fotv = re;
      best_lambda = c.lambda;
    }
  }

  // Midpoint threshold between background and inclusion value, per lung.
  const double threshold = 0.5 * (cfg.sigma0 + e.scene.phantom.inclusions.at(0).value);
  const auto& mesh = e.scene.inverse_mesh;
  double dice_lung[2] = {0.0, 0.0};
  for (int side = 0; side < 2; ++side) {
    std::vector<bool> truth_mask(mesh.num_elements());
    std::vector<bool> recon_mask(mesh.num_elements());
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
      const bool on_side = side == 0 ? mesh.centroids()[k].x() < 0.0 : mesh.centroids()[k].x() >= 0.0;
      const auto ki = static_cast<Eigen::Index>(k);
      truth_mask[k] = on_side && e.sim.truth[ki] > threshold;
      recon_mask[k] = on_side && cfg.sigma0 + nw.field[ki] > threshold;
    }
    dice_lung[side] = dice(truth_mask, recon_mask);
  }
  const double secs = seconds_since(t0);

  const bool a = re_n < re1;
  const bool b = re_n <= best_fotv;
  const bool c = dice_lung[0] >= 0.5 && dice_lung[1] >= 0.5;
  Outcome o;
  o.pass = a && b && c && secs < 30.0;
  o.detail = fmt("(a) %s RE(1)=%.5f RE(%zu)=%.5f; (b) %s NWATV %.5f vs best FOTV %.5f at lambda=%.0e; "
                 "(c) %s Dice left %.3f right %.3f at threshold %.3f; %.2f s (limit 30 s)",
                 a ? "ok" : "FAILED", re1, nw_eval.re_per_iter.size(), re_n, b ? "ok" : "FAILED", re_n,
                 best_fotv, best_lambda, c ? "ok" : "FAILED", dice_lung[0], dice_lung[1], threshold, secs);
  return o;
}

// 6
Outcome sweep(PipelineConfig cfg) {
  const auto t0 = Clock::now();
  cfg.phantom_model = 10;
  const EndToEnd e = prepare(cfg);
  const auto cells = run_sweep(cfg, e.scene, e.model, e.sim.noisy_delta_v, e.sim.truth);
  const std::size_t nr = cfg.sweep_lambda_over_rho.size();
  const std::size_t nd = cfg.sweep_delta.size();
  for (const auto& c : cells) {
    if (!c.error.empty()) return {false, "cell " + std::to_string(c.index) + " failed: " + c.error};
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].re < cells[best].re) best = i;
  }
  const std::size_t best_r = best / nd;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t d = 0; d < nd; ++d) {
    lo = std::min(lo, cells[best_r * nd + d].re);
    hi = std::max(hi, cells[best_r * nd + d].re);
  }
  const double variation = (hi - lo) / lo;
  const double secs = seconds_since(t0);
  const bool interior = best_r > 0 && best_r + 1 < nr;
  Outcome o;
  o.pass = nr == 7 && nd == 5 && interior && variation < 0.2 && secs < 300.0;
  std::ostringstream row;
  for (std::size_t r = 0; r < nr; ++r) {
    row << (r ? " " : "") << fmt("%.4f", cells[r * nd + nd / 2].re);
  }
  o.detail = fmt("%zux%zu grid, best lambda/rho=%.3g (index %zu of %zu, %s), RE across delta varies %.2f%% "
                 "(limit 20%%), RE at middle delta by lambda/rho: %s; %.1f s (limit 300 s)",
                 nr, nd, cells[best].lambda_over_rho, best_r, nr, interior ? "interior" : "edge",
                 100.0 * variation, row.str().c_str(), secs);
  return o;
}

// 7
Outcome iteration_cost(const PipelineConfig& cfg) {
  const EndToEnd e = prepare(cfg);
  const SolverConfig base = resolved_solver_config(cfg, e.scene.inverse_mesh);
  const AdmmSolver solver(e.model.sensitivity.s, e.model.ops, base.rho);
  auto mean_ms = [&](Regularizer m) {
    std::vector<double> means;
    for (int rep = 0; rep < 15; ++rep) {
      const ReconResult r = solver.run(m, e.sim.noisy_delta_v, base);
      double total = 0.0;
      for (const auto& d : r.diagnostics) total += d.wall_ms;
      means.push_back(total / static_cast<double>(r.diagnostics.size()));
    }
    std::nth_element(means.begin(), means.begin() + means.size() / 2, means.end());
    return means[means.size() / 2];
  };
  mean_ms(Regularizer::kNwatv);  // warm-up
  const double nw = mean_ms(Regularizer::kNwatv);
  const double fo = mean_ms(Regularizer::kFotv);
  Outcome o;
  o.pass = nw <= 2.0 * fo;
  o.detail = fmt("NWATV %.3f ms/iter, FOTV %.3f ms/iter, ratio %.2f (limit 2)", nw, fo, nw / fo);
  return o;
}

// 8
Outcome property_suite() {
  const auto t0 = Clock::now();
  const std::string cmd = std::string("\"") + EIT_PROPERTIES_TEST + "\" --gtest_brief=1 > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const double secs = seconds_since(t0);
  const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  Outcome o;
  o.pass = ok && secs < 120.0;
  o.detail = fmt("property tests %s, %.1f s (limit 120 s)", ok ? "passed" : "FAILED", secs);
  return o;
}

}  // namespace

int main() {
  const PipelineConfig cfg = load_config(EIT_DEFAULT_CONFIG);
  run("1", "forward solver vs analytic disk solution", [&] { return forward_oracle(cfg); });
  run("2", "reciprocity and conductivity scaling", [&] { return reciprocity_scaling(cfg); });
  run("3", "linearization fidelity", [&] { return linearization(cfg); });
  run("4", "z-update optimality", [] { return z_update_optimality(); });
  run("5", "end-to-end model 7 reconstruction", [&] { return reproduction(cfg); });
  run("6", "parameter sweep on model 10", [&] { return sweep(cfg); });
  run("7", "per-iteration cost parity", [&] { return iteration_cost(cfg); });
  run("8", "property suite", [] { return property_suite(); });
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
