#include <string>

#include "eit/forward.hpp"

namespace eit {

SensitivityMatrix sensitivity_matrix(const TriMesh& mesh,
                                     const ElectrodeLayout& layout,
                                     const ConductivityField& sigma0,
                                     double current) {
  if (!sigma0.is_homogeneous()) {
    throw std::invalid_argument(
        "sensitivity matrix is only defined about a homogeneous reference");
  }
  if (!(current != 0.0) || !std::isfinite(current)) {
    throw std::invalid_argument("injection current must be finite and nonzero");
  }
  const ForwardSolver solver(mesh, sigma0, layout);
  const DrivePotentials pot = solver.solve_potentials(current);

  const int e = layout.count();
  const auto pairs = neighbouring_protocol(e);
  const auto n = static_cast<Eigen::Index>(mesh.num_elements());

  SensitivityMatrix out;
  out.sigma0 = sigma0.values()[0];
  out.current = current;
  out.electrodes = e;
  out.elements = mesh.num_elements();
  out.s.resize(static_cast<Eigen::Index>(pairs.size()), n);

  // P1 potentials have a constant gradient per triangle.
  Eigen::Matrix<double, 2, Eigen::Dynamic> grad(2, e);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& t = mesh.triangles()[static_cast<std::size_t>(k)];
    const Vec2& a = mesh.nodes()[t[0]];
    const Vec2& b = mesh.nodes()[t[1]];
    const Vec2& c = mesh.nodes()[t[2]];
    const double area = mesh.areas()[static_cast<std::size_t>(k)];
    Eigen::Matrix<double, 2, 3> basis;
    basis.col(0) << b.y() - c.y(), c.x() - b.x();
    basis.col(1) << c.y() - a.y(), a.x() - c.x();
    basis.col(2) << a.y() - b.y(), b.x() - a.x();
    basis /= 2.0 * area;
    for (int j = 0; j < e; ++j) {
      grad.col(j) = basis.col(0) * pot.u(t[0], j) + basis.col(1) * pot.u(t[1], j) +
                    basis.col(2) * pot.u(t[2], j);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [m, q] = pairs[p];
      out.s(static_cast<Eigen::Index>(p), k) =
          area * grad.col(m).dot(grad.col(q)) / current;
    }
  }
  return out;
}

}  // namespace eit
