#include "eit/forward.hpp"

#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>

namespace eit {

ConductivityField::ConductivityField(Eigen::VectorXd values)
    : values_(std::move(values)) {
  for (Eigen::Index k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0) || !std::isfinite(values_[k])) {
      throw std::invalid_argument("conductivity of element " +
                                  std::to_string(k) +
                                  " must be finite and positive");
    }
  }
}

ConductivityField ConductivityField::homogeneous(std::size_t elements,
                                                 double value) {
  return ConductivityField(
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(elements), value));
}

bool ConductivityField::is_homogeneous() const {
  if (values_.size() == 0) return true;
  return (values_.array() == values_[0]).all();
}

Eigen::Matrix3d local_stiffness(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double twice_area =
      (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double area = 0.5 * std::abs(twice_area);
  Eigen::Matrix<double, 2, 3> grad;
  grad.col(0) << b.y() - c.y(), c.x() - b.x();
  grad.col(1) << c.y() - a.y(), a.x() - c.x();
  grad.col(2) << a.y() - b.y(), b.x() - a.x();
  grad /= twice_area;
  return area * grad.transpose() * grad;
}

namespace {

Eigen::Matrix<double, 2, 3> basis_gradients(const TriMesh& mesh, int k) {
  const auto& t = mesh.triangles()[k];
  const Vec2& a = mesh.nodes()[t[0]];
  const Vec2& b = mesh.nodes()[t[1]];
  const Vec2& c = mesh.nodes()[t[2]];
  Eigen::Matrix<double, 2, 3> grad;
  grad.col(0) << b.y() - c.y(), c.x() - b.x();
  grad.col(1) << c.y() - a.y(), a.x() - c.x();
  grad.col(2) << a.y() - b.y(), b.x() - a.x();
  return grad / (2.0 * mesh.areas()[k]);
}

}  // namespace

SparseMatrix assemble_stiffness(const TriMesh& mesh,
                                const ConductivityField& sigma) {
  if (sigma.size() != mesh.num_elements()) {
    throw std::invalid_argument("conductivity has " +
                                std::to_string(sigma.size()) +
                                " values for a mesh of " +
                                std::to_string(mesh.num_elements()) +
                                " elements");
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(9 * mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto& t = mesh.triangles()[k];
    const auto grad = basis_gradients(mesh, static_cast<int>(k));
    const Eigen::Matrix3d local =
        sigma.values()[static_cast<Eigen::Index>(k)] * mesh.areas()[k] *
        (grad.transpose() * grad);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        entries.emplace_back(t[i], t[j], local(i, j));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  SparseMatrix k(n, n);
  k.setFromTriplets(entries.begin(), entries.end());
  return k;
}

struct ForwardSolver::Factorization {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  SparseMatrix grounded;
};

ForwardSolver::ForwardSolver(const TriMesh& mesh,
                             const ConductivityField& sigma,
                             const ElectrodeLayout& layout)
    : stiffness_(assemble_stiffness(mesh, sigma)),
      layout_(layout),
      factor_(std::make_unique<Factorization>()) {
  if (layout.count() < 2) {
    throw std::invalid_argument("forward solve needs at least two electrodes");
  }
  double alpha = stiffness_.diagonal().mean();
  std::vector<Eigen::Triplet<double>> rank_one;
  for (int a : layout.node_ids) {
    for (int b : layout.node_ids) rank_one.emplace_back(a, b, alpha);
  }
  SparseMatrix ground(stiffness_.rows(), stiffness_.cols());
  ground.setFromTriplets(rank_one.begin(), rank_one.end());
  factor_->grounded = stiffness_ + ground;
  factor_->ldlt.compute(factor_->grounded);
  if (factor_->ldlt.info() != Eigen::Success) {
    throw SolverError("sparse LDLT factorisation of the grounded stiffness "
                      "matrix failed");
  }
}

ForwardSolver::~ForwardSolver() = default;
ForwardSolver::ForwardSolver(ForwardSolver&&) noexcept = default;
ForwardSolver& ForwardSolver::operator=(ForwardSolver&&) noexcept = default;

Eigen::VectorXd ForwardSolver::solve(const Eigen::VectorXd& load) const {
  Eigen::VectorXd u = factor_->ldlt.solve(load);
  if (factor_->ldlt.info() != Eigen::Success) {
    throw SolverError("sparse LDLT solve failed");
  }
  const double scale = load.norm();
  if (scale == 0.0) return u;
  double residual = (stiffness_ * u - load).norm() / scale;
  for (int step = 0; step < 3 && residual > kResidualTolerance; ++step) {
    u += factor_->ldlt.solve(load - factor_->grounded * u);
    residual = (stiffness_ * u - load).norm() / scale;
  }
  if (residual > kResidualTolerance) {
    throw SolverError("forward solve residual " + std::to_string(residual) +
                      " exceeds tolerance");
  }
  return u;
}

Eigen::VectorXd ForwardSolver::solve_point_injection(int source_node,
                                                     int sink_node,
                                                     double current) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(stiffness_.rows());
  f[source_node] += current;
  f[sink_node] -= current;
  return solve(f);
}

DrivePotentials ForwardSolver::solve_potentials(double current) const {
  const int e = layout_.count();
  DrivePotentials out;
  out.current = current;
  out.u.resize(stiffness_.rows(), e);
  for (int j = 0; j < e; ++j) {
    try {
      out.u.col(j) = solve_point_injection(layout_.node_ids[j],
                                           layout_.node_ids[(j + 1) % e],
                                           current);
    } catch (const SolverError& err) {
      throw SolverError("drive " + std::to_string(j) + ": " + err.what());
    }
  }
  return out;
}

std::vector<std::pair<int, int>> neighbouring_protocol(int electrodes) {
  std::vector<std::pair<int, int>> pairs;
  if (electrodes < 4) return pairs;
  pairs.reserve(static_cast<std::size_t>(electrodes * (electrodes - 3)));
  for (int j = 0; j < electrodes; ++j) {
    for (int i = 0; i < electrodes; ++i) {
      const int next = (i + 1) % electrodes;
      const int drive_next = (j + 1) % electrodes;
      if (i == j || i == drive_next || next == j) continue;
      pairs.emplace_back(j, i);
    }
  }
  return pairs;
}

int protocol_index(int electrodes, int drive, int measure) {
  if (electrodes < 4 || drive < 0 || drive >= electrodes || measure < 0 ||
      measure >= electrodes) {
    return -1;
  }
  const int drive_next = (drive + 1) % electrodes;
  auto excluded = [&](int i) {
    return i == drive || i == drive_next || (i + 1) % electrodes == drive;
  };
  if (excluded(measure)) return -1;
  int pos = 0;
  for (int i = 0; i < measure; ++i) {
    if (!excluded(i)) ++pos;
  }
  return drive * (electrodes - 3) + pos;
}

void VoltageFrame::validate() const {
  if (electrodes < 4) {
    throw std::invalid_argument("voltage frame needs at least 4 electrodes");
  }
  const auto expected = static_cast<Eigen::Index>(electrodes * (electrodes - 3));
  if (data.size() != expected) {
    throw std::invalid_argument("voltage frame has " +
                                std::to_string(data.size()) +
                                " entries, expected " +
                                std::to_string(expected));
  }
}

double VoltageFrame::at(int drive, int measure) const {
  const int p = protocol_index(electrodes, drive, measure);
  if (p < 0) throw std::out_of_range("pair not in the neighbouring protocol");
  return data[p];
}

VoltageFrame extract_voltages(const DrivePotentials& potentials,
                              const ElectrodeLayout& layout) {
  const int e = layout.count();
  if (potentials.u.cols() != e) {
    throw std::invalid_argument("potentials do not match electrode count");
  }
  VoltageFrame frame;
  frame.electrodes = e;
  const auto pairs = neighbouring_protocol(e);
  frame.data.resize(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [j, i] = pairs[p];
    const int a = layout.node_ids[i];
    const int b = layout.node_ids[(i + 1) % e];
    if (a >= potentials.u.rows() || b >= potentials.u.rows()) {
      throw std::invalid_argument("electrode node outside potential vector");
    }
    frame.data[static_cast<Eigen::Index>(p)] = potentials.u(a, j) - potentials.u(b, j);
  }
  return frame;
}

VoltageFrame simulate_frame(const TriMesh& mesh,
                            const ConductivityField& sigma,
                            const ElectrodeLayout& layout, double current) {
  const ForwardSolver solver(mesh, sigma, layout);
  return extract_voltages(solver.solve_potentials(current), layout);
}

Eigen::VectorXd signed_difference(const VoltageFrame& perturbed,
                                  const VoltageFrame& reference) {
  perturbed.validate();
  reference.validate();
  if (perturbed.electrodes != reference.electrodes) {
    throw std::invalid_argument("frames use different electrode counts");
  }
  return kLinearizationSign * (perturbed.data - reference.data);
}

}  // namespace eit
