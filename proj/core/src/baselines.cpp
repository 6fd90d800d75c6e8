#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "eit/inverse.hpp"

namespace eit {

Eigen::VectorXd reconstruct_tikhonov(const Eigen::MatrixXd& s,
                                     const Eigen::VectorXd& delta_v,
                                     double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("Tikhonov lambda must be > 0");
  }
  if (delta_v.size() != s.rows()) {
    throw std::invalid_argument("voltage datum does not match sensitivity rows");
  }
  Eigen::MatrixXd normal = s.transpose() * s;
  normal.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw SolverError("Tikhonov normal matrix factorisation failed");
  }
  return llt.solve(s.transpose() * delta_v);
}

Eigen::VectorXd preprocess_boundary(const Eigen::VectorXd& delta_v,
                                    const Eigen::MatrixXd& s,
                                    std::span<const int> boundary_elements,
                                    double lambda_b) {
  if (!(lambda_b > 0.0)) {
    throw std::invalid_argument("lambda_b must be > 0");
  }
  if (boundary_elements.empty()) {
    throw std::invalid_argument("no boundary elements given");
  }
  if (delta_v.size() != s.rows()) {
    throw std::invalid_argument("voltage datum does not match sensitivity rows");
  }
  const auto nb = static_cast<Eigen::Index>(boundary_elements.size());
  Eigen::MatrixXd sb(s.rows(), nb);
  for (Eigen::Index c = 0; c < nb; ++c) {
    const int k = boundary_elements[static_cast<std::size_t>(c)];
    if (k < 0 || k >= s.cols()) {
      throw std::out_of_range("boundary element " + std::to_string(k) +
                              " outside the sensitivity columns");
    }
    sb.col(c) = s.col(k);
  }
  Eigen::MatrixXd normal = sb.transpose() * sb;
  normal.diagonal().array() += lambda_b;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const Eigen::VectorXd coeff = ldlt.solve(sb.transpose() * delta_v);
  return delta_v - sb * coeff;
}

const char* to_string(Regularizer r) {
  switch (r) {
    case Regularizer::kNwatv: return "nwatv";
    case Regularizer::kFotv: return "fotv";
    case Regularizer::kTv: return "tv";
    case Regularizer::kTikhonov: return "tikhonov";
  }
  return "unknown";
}

Regularizer parse_regularizer(std::string_view name) {
  if (name == "nwatv") return Regularizer::kNwatv;
  if (name == "fotv") return Regularizer::kFotv;
  if (name == "tv") return Regularizer::kTv;
  if (name == "tikhonov") return Regularizer::kTikhonov;
  throw std::invalid_argument("unknown solver '" + std::string(name) +
                              "' (expected nwatv, fotv, tv or tikhonov)");
}

ReconResult reconstruct(Regularizer method, const Eigen::MatrixXd& s,
                        const Eigen::VectorXd& delta_v,
                        const DifferenceOperators& ops,
                        const SolverConfig& config) {
  switch (method) {
    case Regularizer::kNwatv: return reconstruct_nwatv(s, delta_v, ops, config);
    case Regularizer::kFotv: return reconstruct_fotv(s, delta_v, ops, config);
    case Regularizer::kTv: return reconstruct_tv_isotropic(s, delta_v, ops, config);
    case Regularizer::kTikhonov: break;
  }
  const auto t0 = std::chrono::steady_clock::now();
  ReconResult result;
  result.field = reconstruct_tikhonov(s, delta_v, config.lambda);
  const auto t1 = std::chrono::steady_clock::now();
  result.history.push_back(result.field);
  IterationDiagnostics diag;
  diag.iteration = 1;
  diag.data_residual = (s * result.field - delta_v).norm();
  diag.step_norm = result.field.norm();
  diag.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  result.diagnostics.push_back(diag);
  result.termination = Termination::kDirect;
  return result;
}

}  // namespace eit
