#include "eit/mesh.hpp"

#include <vector>

namespace eit {

namespace {

// axis = 0 for x, 1 for y.
SparseMatrix axis_difference(const TriMesh& mesh, int axis) {
  const auto n = static_cast<int>(mesh.num_elements());
  const auto& c = mesh.centroids();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    int best = -1;
    double best_step = 0.0;
    for (int l : mesh.neighbors()[k]) {
      const Vec2 d = c[l] - c[k];
      const double step = d[axis];
      if (step > kAxisDirectionThreshold * d.norm() && step > best_step) {
        best = l;
        best_step = step;
      }
    }
    if (best < 0) continue;
    entries.emplace_back(k, k, -1.0 / best_step);
    entries.emplace_back(k, best, 1.0 / best_step);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

}  // namespace

DifferenceOperators build_difference_operators(const TriMesh& mesh) {
  DifferenceOperators ops;
  ops.dx = axis_difference(mesh, 0);
  ops.dy = axis_difference(mesh, 1);

  const auto n = static_cast<int>(mesh.num_elements());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(ops.dx.nonZeros() + ops.dy.nonZeros()));
  for (int col = 0; col < ops.dx.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(ops.dx, col); it; ++it) {
      entries.emplace_back(it.row(), it.col(), it.value());
    }
    for (SparseMatrix::InnerIterator it(ops.dy, col); it; ++it) {
      entries.emplace_back(it.row() + n, it.col(), it.value());
    }
  }
  ops.d.resize(2 * n, n);
  ops.d.setFromTriplets(entries.begin(), entries.end());
  return ops;
}

}  // namespace eit
