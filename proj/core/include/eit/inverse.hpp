#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "eit/forward.hpp"
#include "eit/mesh.hpp"

namespace eit {

/// Parameters of the ADMM reconstructions. Defaults are the values used for
/// the 2D lung simulations.
struct SolverConfig {
  double lambda = 5e-13;
  double rho = 1e-10;
  /// Floor in the edge weight 1 / (|D ds|^2 + delta).
  double delta = 0.01;
  int max_iters = 20;
  double tol = 1e-5;
  /// Elements allowed to change; empty optional means no mask.
  std::optional<std::vector<int>> mask;
  double lambda_b = 1e-7;
  bool enable_preprocess = false;
  /// Elements whose columns are projected out by preprocessing.
  std::vector<int> boundary_elements;

  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
};

/// ADMM iterate (ds, z, p, y).
struct AdmmState {
  Eigen::VectorXd delta_sigma;
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  Eigen::VectorXd y;
  int iteration = 0;
};

struct IterationDiagnostics {
  int iteration = 0;
  double data_residual = 0.0;
  double step_norm = 0.0;
  double wall_ms = 0.0;
};

enum class Termination { kTolerance, kMaxIterations, kDirect };

const char* to_string(Termination t);

struct ReconResult {
  /// delta_sigma after every completed iteration.
  std::vector<Eigen::VectorXd> history;
  Eigen::VectorXd field;
  std::vector<IterationDiagnostics> diagnostics;
  Termination termination = Termination::kMaxIterations;
};

/// h_g(x) = x - g sgn(x) if |x| > g, else 0.
double soft_threshold(double x, double g);

/// p = (zeta; zeta) with zeta_k = 1 / ((Dx ds)_k^2 + (Dy ds)_k^2 + delta).
Eigen::VectorXd nwatv_weights(const Eigen::VectorXd& delta_sigma,
                              const DifferenceOperators& ops, double delta);

/// Element-wise soft thresholding of w = D ds + y / rho at lambda p / rho.
Eigen::VectorXd z_update(const Eigen::VectorXd& w, const Eigen::VectorXd& p,
                         double lambda, double rho);

/// Isotropic variant: each (x, y) pair (w_k, w_{k+N}) is shrunk towards zero
/// as a vector, z_k = max(0, 1 - (lambda/rho)/|w_k|) w_k.
Eigen::VectorXd group_shrink(const Eigen::VectorXd& w, double lambda,
                             double rho);

/// y + rho (D ds - z).
Eigen::VectorXd dual_update(const Eigen::VectorXd& y, const SparseMatrix& d,
                            const Eigen::VectorXd& delta_sigma,
                            const Eigen::VectorXd& z, double rho);

/// Cached factorisation of (1/rho) S^T S + D^T D for repeated sigma updates.
class SigmaUpdateSolver {
 public:
  /// Throws SolverError if the matrix cannot be factorised even after the
  /// diagonal floor is applied.
  SigmaUpdateSolver(Eigen::MatrixXd s, SparseMatrix d, double rho);

  /// Solves for (1/rho) S^T dV + D^T z - D^T y / rho to relative residual
  /// <= kResidualTolerance.
  Eigen::VectorXd solve(const Eigen::VectorXd& delta_v, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& y) const;

  /// Diagonal shift added when the plain factorisation failed (0 if none).
  double floor_shift() const { return floor_; }
  double rho() const { return rho_; }
  const Eigen::MatrixXd& sensitivity() const { return s_; }

  static constexpr double kResidualTolerance = 1e-8;

 private:
  Eigen::MatrixXd s_;
  SparseMatrix d_;
  double rho_;
  double floor_ = 0.0;
  Eigen::MatrixXd normal_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// One-shot sigma update; factorises on every call.
Eigen::VectorXd sigma_update(const Eigen::MatrixXd& s,
                             const Eigen::VectorXd& delta_v,
                             const SparseMatrix& d, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& y, double rho);

/// dV - S_b (S_b^T S_b + lambda_b I)^{-1} S_b^T dV with S_b the columns of S
/// listed in boundary_elements.
Eigen::VectorXd preprocess_boundary(const Eigen::VectorXd& delta_v,
                                    const Eigen::MatrixXd& s,
                                    std::span<const int> boundary_elements,
                                    double lambda_b);

/// Zeroes every entry whose index is not in mask.
Eigen::VectorXd apply_mask(const Eigen::VectorXd& delta_sigma,
                           std::span<const int> mask);

/// Weighted anisotropic TV reconstruction (edge weights refreshed every
/// iteration).
ReconResult reconstruct_nwatv(const Eigen::MatrixXd& s,
                              const Eigen::VectorXd& delta_v,
                              const DifferenceOperators& ops,
                              const SolverConfig& config);

/// Same loop with the weights frozen at 1 (first-order anisotropic TV).
ReconResult reconstruct_fotv(const Eigen::MatrixXd& s,
                             const Eigen::VectorXd& delta_v,
                             const DifferenceOperators& ops,
                             const SolverConfig& config);

/// Isotropic TV through group shrinkage of the (x, y) difference pairs.
ReconResult reconstruct_tv_isotropic(const Eigen::MatrixXd& s,
                                     const Eigen::VectorXd& delta_v,
                                     const DifferenceOperators& ops,
                                     const SolverConfig& config);

/// (S^T S + lambda I)^{-1} S^T dV. Throws std::invalid_argument if
/// lambda <= 0.
Eigen::VectorXd reconstruct_tikhonov(const Eigen::MatrixXd& s,
                                     const Eigen::VectorXd& delta_v,
                                     double lambda);

enum class Regularizer { kNwatv, kFotv, kTv, kTikhonov };

const char* to_string(Regularizer r);
/// Throws std::invalid_argument for an unknown name.
Regularizer parse_regularizer(std::string_view name);

/// ADMM driver holding one sigma-update factorisation, so several
/// reconstructions sharing S, D and rho (frames, parameter sweeps) factorise
/// once. run() is const and may be called concurrently.
class AdmmSolver {
 public:
  AdmmSolver(Eigen::MatrixXd s, DifferenceOperators ops, double rho);

  /// Throws std::invalid_argument if config.rho differs from the rho the
  /// solver was built with, or method is Tikhonov.
  ReconResult run(Regularizer method, const Eigen::VectorXd& delta_v,
                  const SolverConfig& config) const;

  const DifferenceOperators& operators() const { return ops_; }
  const SigmaUpdateSolver& sigma_solver() const { return sigma_; }

 private:
  DifferenceOperators ops_;
  SigmaUpdateSolver sigma_;
};

/// Dispatches to the reconstruction named by method; Tikhonov uses
/// config.lambda and reports a single direct iteration.
ReconResult reconstruct(Regularizer method, const Eigen::MatrixXd& s,
                        const Eigen::VectorXd& delta_v,
                        const DifferenceOperators& ops,
                        const SolverConfig& config);

}  // namespace eit
