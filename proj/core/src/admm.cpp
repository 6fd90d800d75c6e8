#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "eit/inverse.hpp"

namespace eit {

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("solver config: " + what);
  };
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be >= 0");
  if (!(rho > 0.0) || !std::isfinite(rho)) fail("rho must be > 0");
  if (!(delta > 0.0) || !std::isfinite(delta)) fail("delta must be > 0");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (!(tol > 0.0)) fail("tol must be > 0");
  if (enable_preprocess) {
    if (!(lambda_b > 0.0)) fail("lambda_b must be > 0 when preprocessing");
    if (boundary_elements.empty()) fail("preprocessing needs boundary elements");
  }
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kTolerance: return "tol";
    case Termination::kMaxIterations: return "max_iters";
    case Termination::kDirect: return "direct";
  }
  return "unknown";
}

double soft_threshold(double x, double g) {
  if (std::abs(x) > g) return x > 0.0 ? x - g : x + g;
  return 0.0;
}

Eigen::VectorXd nwatv_weights(const Eigen::VectorXd& delta_sigma,
                              const DifferenceOperators& ops, double delta) {
  const Eigen::VectorXd gx = ops.dx * delta_sigma;
  const Eigen::VectorXd gy = ops.dy * delta_sigma;
  const Eigen::VectorXd zeta =
      (gx.array().square() + gy.array().square() + delta).inverse().matrix();
  Eigen::VectorXd p(2 * zeta.size());
  p << zeta, zeta;
  return p;
}

Eigen::VectorXd z_update(const Eigen::VectorXd& w, const Eigen::VectorXd& p,
                         double lambda, double rho) {
  if (w.size() != p.size()) {
    throw std::invalid_argument("z_update: weight and argument sizes differ");
  }
  Eigen::VectorXd z(w.size());
  const double ratio = lambda / rho;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    z[k] = soft_threshold(w[k], ratio * p[k]);
  }
  return z;
}

Eigen::VectorXd group_shrink(const Eigen::VectorXd& w, double lambda,
                             double rho) {
  if (w.size() % 2 != 0) {
    throw std::invalid_argument("group_shrink: expected (x; y) stacked vector");
  }
  const Eigen::Index n = w.size() / 2;
  const double g = lambda / rho;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(w.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double norm = std::hypot(w[k], w[k + n]);
    if (norm <= g) continue;
    const double scale = 1.0 - g / norm;
    z[k] = scale * w[k];
    z[k + n] = scale * w[k + n];
  }
  return z;
}

Eigen::VectorXd dual_update(const Eigen::VectorXd& y, const SparseMatrix& d,
                            const Eigen::VectorXd& delta_sigma,
                            const Eigen::VectorXd& z, double rho) {
  return y + rho * (d * delta_sigma - z);
}

SigmaUpdateSolver::SigmaUpdateSolver(Eigen::MatrixXd s, SparseMatrix d,
                                     double rho)
    : s_(std::move(s)), d_(std::move(d)), rho_(rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  if (d_.cols() != s_.cols()) {
    throw std::invalid_argument("sensitivity and difference operator disagree "
                                "on the element count");
  }
  const Eigen::MatrixXd dtd = Eigen::MatrixXd(d_.transpose() * d_);
  normal_ = (s_.transpose() * s_) / rho_ + dtd;
  llt_.compute(normal_);
  if (llt_.info() != Eigen::Success) {
    floor_ = 1e-12 * normal_.trace() / static_cast<double>(normal_.rows());
    std::clog << "eit: sigma-update matrix not positive definite, adding "
              << floor_ << " to the diagonal\n";
    normal_.diagonal().array() += floor_;
    llt_.compute(normal_);
    if (llt_.info() != Eigen::Success) {
      throw SolverError("sigma-update matrix is not positive definite even "
                        "after a diagonal floor of " + std::to_string(floor_));
    }
  }
}

Eigen::VectorXd SigmaUpdateSolver::solve(const Eigen::VectorXd& delta_v,
                                         const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& y) const {
  if (delta_v.size() != s_.rows() || z.size() != d_.rows() ||
      y.size() != d_.rows()) {
    throw std::invalid_argument("sigma update: inconsistent vector sizes");
  }
  const Eigen::VectorXd rhs =
      s_.transpose() * delta_v / rho_ + d_.transpose() * (z - y / rho_);
  const double scale = rhs.norm();
  if (scale == 0.0) return Eigen::VectorXd::Zero(s_.cols());
  Eigen::VectorXd x = llt_.solve(rhs);
  double residual = (normal_ * x - rhs).norm() / scale;
  for (int step = 0; step < 3 && residual > kResidualTolerance; ++step) {
    x += llt_.solve(rhs - normal_ * x);
    residual = (normal_ * x - rhs).norm() / scale;
  }
  if (!(residual <= kResidualTolerance)) {
    throw SolverError("sigma update residual " + std::to_string(residual) +
                      " above tolerance (reciprocal condition estimate " +
                      std::to_string(llt_.rcond()) + ")");
  }
  return x;
}

Eigen::VectorXd sigma_update(const Eigen::MatrixXd& s,
                             const Eigen::VectorXd& delta_v,
                             const SparseMatrix& d, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& y, double rho) {
  return SigmaUpdateSolver(s, d, rho).solve(delta_v, z, y);
}

Eigen::VectorXd apply_mask(const Eigen::VectorXd& delta_sigma,
                           std::span<const int> mask) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(delta_sigma.size());
  for (int k : mask) {
    if (k < 0 || k >= delta_sigma.size()) {
      throw std::out_of_range("mask index " + std::to_string(k) +
                              " outside the element range");
    }
    out[k] = delta_sigma[k];
  }
  return out;
}

AdmmSolver::AdmmSolver(Eigen::MatrixXd s, DifferenceOperators ops, double rho)
    : ops_(std::move(ops)), sigma_(std::move(s), ops_.d, rho) {}

ReconResult AdmmSolver::run(Regularizer method, const Eigen::VectorXd& delta_v,
                            const SolverConfig& config) const {
  config.validate();
  if (method == Regularizer::kTikhonov) {
    throw std::invalid_argument("Tikhonov is a direct method, not an ADMM run");
  }
  if (config.rho != sigma_.rho()) {
    throw std::invalid_argument("config rho does not match the factorised rho");
  }
  const Eigen::MatrixXd& s = sigma_.sensitivity();
  if (delta_v.size() != s.rows()) {
    throw std::invalid_argument("voltage datum has " +
                                std::to_string(delta_v.size()) +
                                " entries, sensitivity matrix has " +
                                std::to_string(s.rows()) + " rows");
  }
  const Eigen::Index n = s.cols();
  const Eigen::VectorXd data =
      config.enable_preprocess
          ? preprocess_boundary(delta_v, s, config.boundary_elements,
                                config.lambda_b)
          : delta_v;

  AdmmState state;
  state.delta_sigma = Eigen::VectorXd::Zero(n);
  state.z = Eigen::VectorXd::Zero(2 * n);
  state.y = Eigen::VectorXd::Zero(2 * n);
  state.p = Eigen::VectorXd::Ones(2 * n);

  ReconResult result;
  result.termination = Termination::kMaxIterations;
  using Clock = std::chrono::steady_clock;

  for (int it = 1; it <= config.max_iters; ++it) {
    const auto t0 = Clock::now();
    Eigen::VectorXd next;
    try {
      next = sigma_.solve(data, state.z, state.y);
    } catch (const SolverError& err) {
      throw SolverError("iteration " + std::to_string(it) + ": " + err.what());
    }
    if (config.mask) next = apply_mask(next, *config.mask);
    if (!next.allFinite()) {
      throw SolverError("iteration " + std::to_string(it) +
                        ": non-finite conductivity update");
    }

    const Eigen::VectorXd grad = ops_.d * next;
    const Eigen::VectorXd w = grad + state.y / config.rho;
    state.z = method == Regularizer::kTv
                  ? group_shrink(w, config.lambda, config.rho)
                  : z_update(w, state.p, config.lambda, config.rho);
    if (method == Regularizer::kNwatv) {
      state.p = nwatv_weights(next, ops_, config.delta);
    }
    state.y += config.rho * (grad - state.z);

    const double step = (next - state.delta_sigma).norm();
    state.delta_sigma = std::move(next);
    state.iteration = it;
    const auto t1 = Clock::now();

    IterationDiagnostics diag;
    diag.iteration = it;
    diag.data_residual = (s * state.delta_sigma - data).norm();
    diag.step_norm = step;
    diag.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.diagnostics.push_back(diag);
    result.history.push_back(state.delta_sigma);

    if (step < config.tol) {
      result.termination = Termination::kTolerance;
      break;
    }
  }
  result.field = state.delta_sigma;
  return result;
}

namespace {

ReconResult run_once(Regularizer method, const Eigen::MatrixXd& s,
                     const Eigen::VectorXd& delta_v,
                     const DifferenceOperators& ops,
                     const SolverConfig& config) {
  config.validate();
  return AdmmSolver(s, ops, config.rho).run(method, delta_v, config);
}

}  // namespace

ReconResult reconstruct_nwatv(const Eigen::MatrixXd& s,
                              const Eigen::VectorXd& delta_v,
                              const DifferenceOperators& ops,
                              const SolverConfig& config) {
  return run_once(Regularizer::kNwatv, s, delta_v, ops, config);
}

ReconResult reconstruct_fotv(const Eigen::MatrixXd& s,
                             const Eigen::VectorXd& delta_v,
                             const DifferenceOperators& ops,
                             const SolverConfig& config) {
  return run_once(Regularizer::kFotv, s, delta_v, ops, config);
}

ReconResult reconstruct_tv_isotropic(const Eigen::MatrixXd& s,
                                     const Eigen::VectorXd& delta_v,
                                     const DifferenceOperators& ops,
                                     const SolverConfig& config) {
  return run_once(Regularizer::kTv, s, delta_v, ops, config);
}

}  // namespace eit
