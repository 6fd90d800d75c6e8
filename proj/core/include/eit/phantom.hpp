#pragma once

#include <vector>

#include "eit/forward.hpp"
#include "eit/mesh.hpp"

namespace eit {

/// Ellipse spanned by two semi-axis vectors from its centre: p is inside iff
/// the coordinates of p - center in the basis (axis_a, axis_b) have
/// Euclidean norm <= 1.
struct EllipseInclusion {
  Vec2 center = Vec2::Zero();
  Vec2 axis_a = Vec2::UnitX();
  Vec2 axis_b = Vec2::UnitY();
  double value = 1.0;

  bool contains(const Vec2& p) const;
};

struct PhantomSpec {
  double background = 1.0;
  std::vector<EllipseInclusion> inclusions;

  /// Throws std::invalid_argument on a non-positive conductivity or
  /// (near-)parallel semi-axis vectors.
  void validate() const;

  /// Value of the first inclusion containing p, else the background.
  double value_at(const Vec2& p) const;

  bool operator==(const PhantomSpec&) const = default;
};

inline bool operator==(const EllipseInclusion& a, const EllipseInclusion& b) {
  return a.center == b.center && a.axis_a == b.axis_a && a.axis_b == b.axis_b &&
         a.value == b.value;
}

/// Two-lung model k = 1..10: ellipses centred at (+-0.04, -0.01) m whose
/// semi-axes grow with k, 1.1 S/m inside a 1.0 S/m background.
/// Throws std::invalid_argument for k outside 1..10.
PhantomSpec lung_model(int k);

inline constexpr double kLungBackground = 1.0;
inline constexpr double kLungInclusion = 1.1;

/// Element k takes value_at(centroid k).
ConductivityField assign_conductivity(const TriMesh& mesh,
                                      const PhantomSpec& spec);

/// Per-element index of the inclusion containing the centroid, or -1.
std::vector<int> inclusion_labels(const TriMesh& mesh, const PhantomSpec& spec);

}  // namespace eit
