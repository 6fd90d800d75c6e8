#include "eit/phantom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace eit {

namespace {

Eigen::Matrix2d axes(const EllipseInclusion& e) {
  Eigen::Matrix2d m;
  m.col(0) = e.axis_a;
  m.col(1) = e.axis_b;
  return m;
}

}  // namespace

bool EllipseInclusion::contains(const Vec2& p) const {
  const Vec2 local = axes(*this).partialPivLu().solve(p - center);
  return local.squaredNorm() <= 1.0;
}

void PhantomSpec::validate() const {
  if (!(background > 0.0) || !std::isfinite(background)) {
    throw std::invalid_argument("phantom background must be positive");
  }
  for (std::size_t i = 0; i < inclusions.size(); ++i) {
    const auto& inc = inclusions[i];
    if (!(inc.value > 0.0) || !std::isfinite(inc.value)) {
      throw std::invalid_argument("inclusion " + std::to_string(i) +
                                  " must have positive conductivity");
    }
    const double det = axes(inc).determinant();
    if (!(std::abs(det) > 1e-12 * inc.axis_a.norm() * inc.axis_b.norm())) {
      throw std::invalid_argument("inclusion " + std::to_string(i) +
                                  " has linearly dependent semi-axes");
    }
  }
}

double PhantomSpec::value_at(const Vec2& p) const {
  for (const auto& inc : inclusions) {
    if (inc.contains(p)) return inc.value;
  }
  return background;
}

PhantomSpec lung_model(int k) {
  if (k < 1 || k > 10) {
    throw std::invalid_argument("lung model index must be in 1..10, got " +
                                std::to_string(k));
  }
  const double s = 0.012 + 0.001 * k;
  const double l = 0.024 + 0.002 * k;
  const double m = 0.006 + 0.0005 * k;
  PhantomSpec spec;
  spec.background = kLungBackground;
  // Left lung listed first.
  spec.inclusions.push_back({Vec2(-0.04, -0.01), Vec2(s, l), Vec2(-s, m),
                             kLungInclusion});
  spec.inclusions.push_back({Vec2(0.04, -0.01), Vec2(-s, l), Vec2(s, m),
                             kLungInclusion});
  return spec;
}

ConductivityField assign_conductivity(const TriMesh& mesh,
                                      const PhantomSpec& spec) {
  spec.validate();
  Eigen::VectorXd values(static_cast<Eigen::Index>(mesh.num_elements()));
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    values[static_cast<Eigen::Index>(k)] = spec.value_at(mesh.centroids()[k]);
  }
  return ConductivityField(std::move(values));
}

std::vector<int> inclusion_labels(const TriMesh& mesh, const PhantomSpec& spec) {
  std::vector<int> labels(mesh.num_elements(), -1);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    for (std::size_t i = 0; i < spec.inclusions.size(); ++i) {
      if (spec.inclusions[i].contains(mesh.centroids()[k])) {
        labels[k] = static_cast<int>(i);
        break;
      }
    }
  }
  return labels;
}

}  // namespace eit
