#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eit/mesh.hpp"

namespace eit {

/// Raised when a linear solve fails or misses its residual contract.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Piecewise-constant conductivity, S/m, one value per element.
class ConductivityField {
 public:
  ConductivityField() = default;
  /// Throws std::invalid_argument unless every value is finite and > 0.
  explicit ConductivityField(Eigen::VectorXd values);

  static ConductivityField homogeneous(std::size_t elements, double value);

  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  bool is_homogeneous() const;

 private:
  Eigen::VectorXd values_;
};

/// P1 stiffness matrix sum_k sigma_k * area_k * grad(phi_a) . grad(phi_b).
/// Throws std::invalid_argument on a size mismatch.
SparseMatrix assemble_stiffness(const TriMesh& mesh,
                                const ConductivityField& sigma);

/// 3x3 local P1 stiffness of one triangle with unit conductivity.
Eigen::Matrix3d local_stiffness(const Vec2& a, const Vec2& b, const Vec2& c);

/// Nodal potentials for the E adjacent-pair drives, column j driven by
/// +I at electrode j and -I at electrode j+1 (mod E).
struct DrivePotentials {
  Eigen::MatrixXd u;  // num_nodes x E
  double current = 0.0;
};

/// Factorised Neumann problem for one conductivity. The constant null space
/// is removed by folding the rank-one term alpha * w w^T into the matrix,
/// where w marks the electrode nodes; every solution then has zero mean over
/// the electrodes. Immutable once built, so solves may run concurrently.
class ForwardSolver {
 public:
  ForwardSolver(const TriMesh& mesh, const ConductivityField& sigma,
                const ElectrodeLayout& layout);
  ~ForwardSolver();
  ForwardSolver(ForwardSolver&&) noexcept;
  ForwardSolver& operator=(ForwardSolver&&) noexcept;

  const SparseMatrix& stiffness() const { return stiffness_; }
  const ElectrodeLayout& layout() const { return layout_; }

  /// Solves K u = f for a net-zero nodal load. Throws SolverError when the
  /// relative residual exceeds kResidualTolerance.
  Eigen::VectorXd solve(const Eigen::VectorXd& load) const;

  /// +current at source node, -current at sink node.
  Eigen::VectorXd solve_point_injection(int source_node, int sink_node,
                                        double current) const;

  /// Adjacent-pair drives j = 0..E-1.
  DrivePotentials solve_potentials(double current) const;

  static constexpr double kResidualTolerance = 1e-10;

 private:
  struct Factorization;
  SparseMatrix stiffness_;
  ElectrodeLayout layout_;
  std::unique_ptr<Factorization> factor_;
};

/// Adjacent (drive, measure) pairs of the neighbouring protocol, drive-major.
/// Measurement pairs sharing an electrode with the drive pair are skipped,
/// which leaves E-3 measurements per drive.
std::vector<std::pair<int, int>> neighbouring_protocol(int electrodes);

/// Flat index of (drive, measure) in a frame, or -1 if the pair is excluded.
int protocol_index(int electrodes, int drive, int measure);

/// Differential boundary voltages of one scan, E(E-3) entries.
struct VoltageFrame {
  int electrodes = 0;
  Eigen::VectorXd data;

  /// Throws std::invalid_argument unless data.size() == E(E-3).
  void validate() const;
  double at(int drive, int measure) const;
};

/// V[drive][measure] = u^drive(E_measure) - u^drive(E_measure+1).
VoltageFrame extract_voltages(const DrivePotentials& potentials,
                              const ElectrodeLayout& layout);

/// Convenience: factorise, drive all pairs and extract a frame.
VoltageFrame simulate_frame(const TriMesh& mesh,
                            const ConductivityField& sigma,
                            const ElectrodeLayout& layout, double current);

/// Sensitivity of a frame to element conductivities about a homogeneous
/// reference, S_pq = (1/I) area_q grad u0^m . grad u0^n on element q.
struct SensitivityMatrix {
  Eigen::MatrixXd s;  // E(E-3) x N
  double sigma0 = 0.0;
  double current = 0.0;
  int electrodes = 0;
  std::size_t elements = 0;
};

/// Throws std::invalid_argument unless sigma0 is homogeneous.
SensitivityMatrix sensitivity_matrix(const TriMesh& mesh,
                                     const ElectrodeLayout& layout,
                                     const ConductivityField& sigma0,
                                     double current);

/// Sign relating S to the measured voltage change: for sigma = sigma0 + ds,
///   V[sigma] - V[sigma0] ~= kLinearizationSign * S ds.
/// Raising a conductivity lowers every driven-pair potential drop, so the
/// first-order change carries a minus sign; the forward tests check this
/// against two full forward solves.
inline constexpr double kLinearizationSign = -1.0;

/// Datum the linearised model S ds = dV reconstructs from.
Eigen::VectorXd signed_difference(const VoltageFrame& perturbed,
                                  const VoltageFrame& reference);

/// Signal-to-noise value meaning "no noise".
inline constexpr double kNoiseFree = std::numeric_limits<double>::infinity();

/// Adds i.i.d. Gaussian noise with standard deviation
/// ||frame|| * 10^(-snr_db / 20) / sqrt(len). snr_db = +inf returns the input.
/// Throws std::invalid_argument for a zero frame or NaN/-inf snr_db.
Eigen::VectorXd add_noise(const Eigen::VectorXd& frame, double snr_db,
                          std::uint64_t seed);

VoltageFrame add_noise(const VoltageFrame& frame, double snr_db,
                       std::uint64_t seed);

}  // namespace eit
