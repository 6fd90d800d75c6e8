#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace eit {

using Vec2 = Eigen::Vector2d;
using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Unstructured triangulation of a 2D domain.
///
/// Immutable after construction. Triangles are stored counter-clockwise and
/// the boundary edges form one closed counter-clockwise loop, so
/// boundary_edges()[k][1] == boundary_edges()[k+1][0].
class TriMesh {
 public:
  TriMesh() = default;

  /// Builds derived data (centroids, areas, adjacency, boundary loop) and
  /// checks the mesh invariants. Clockwise triangles are reoriented.
  /// Throws std::invalid_argument on degenerate or non-manifold input.
  static TriMesh from_geometry(std::vector<Vec2> nodes,
                               std::vector<Triangle> triangles);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return triangles_.size(); }

  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<Vec2>& centroids() const { return centroids_; }
  const std::vector<double>& areas() const { return areas_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

  /// Boundary nodes in loop order.
  std::vector<int> boundary_nodes() const;
  /// Elements that own at least one boundary edge, ascending.
  std::vector<int> boundary_elements() const;

  double total_area() const;
  double max_boundary_edge_length() const;
  /// Largest distance of any node from the origin.
  double max_node_radius() const;

 private:
  std::vector<Vec2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  std::vector<Vec2> centroids_;
  std::vector<double> areas_;
  std::vector<std::vector<int>> neighbors_;
};

/// Concentric-ring triangulation of the disk of the given radius centred at
/// the origin. Ring i carries 6i nodes, so the mesh has 6n^2 triangles and
/// 3n(n+1)+1 nodes; n is chosen so the element count is closest to
/// target_elements. Deterministic. Throws std::invalid_argument when
/// radius <= 0 or target_elements < 64.
TriMesh generate_disk_mesh(double radius, std::size_t target_elements);

/// Number of rings generate_disk_mesh() uses for a given target.
int disk_ring_count(std::size_t target_elements);

struct ElectrodeLayout {
  /// Polar angle of each electrode node, radians in [0, 2pi).
  std::vector<double> angles;
  /// Boundary node carrying each point electrode, in electrode order.
  std::vector<int> node_ids;

  int count() const { return static_cast<int>(node_ids.size()); }
};

/// Snaps E equally spaced ideal angles 2*pi*i/E to the nearest boundary node.
/// Throws std::invalid_argument if E < 4, the boundary is too short, or two
/// ideal angles snap to the same node.
ElectrodeLayout place_electrodes(const TriMesh& mesh, int count);

/// Snaps the given angles to the nearest boundary nodes. Used to put the
/// electrodes of a finer forward mesh at the positions chosen on the
/// inversion mesh.
ElectrodeLayout place_electrodes_at(const TriMesh& mesh,
                                    std::span<const double> angles);

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Element-wise first-order difference operators along x and y.
struct DifferenceOperators {
  SparseMatrix dx;
  SparseMatrix dy;
  /// Vertical stack (dx; dy), 2N x N.
  SparseMatrix d;
};

/// Minimum cosine between a neighbour displacement and the axis for the
/// neighbour to count as lying "along" that axis.
inline constexpr double kAxisDirectionThreshold = 0.2;

/// For element k the dx row is (s_l - s_k) / dx_kl where l is the edge
/// neighbour with the largest positive x displacement of the centroid,
/// provided dx_kl > 0.2 * |c_l - c_k|. Rows without such a neighbour are
/// zero. dy is built the same way along y.
DifferenceOperators build_difference_operators(const TriMesh& mesh);

/// Row-major pixel image over the square [-extent, extent]^2. Pixels whose
/// centre lies outside the mesh hold NaN.
struct Image {
  int width = 0;
  int height = 0;
  double extent = 0.0;
  std::vector<double> pixels;

  double at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  double& at(int row, int col) {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  /// Centre of pixel (row, col) in domain coordinates; row 0 is the top.
  Vec2 pixel_center(int row, int col) const;
  static bool in_domain(double v) { return !std::isnan(v); }
};

inline constexpr double kOutsideDomain = std::numeric_limits<double>::quiet_NaN();

/// Point location over a TriMesh using a uniform bucket grid.
class TriangleLocator {
 public:
  explicit TriangleLocator(const TriMesh& mesh);

  /// Index of a triangle containing p (boundary inclusive), if any.
  std::optional<int> locate(const Vec2& p) const;

 private:
  const TriMesh* mesh_;
  Vec2 lo_;
  double cell_ = 1.0;
  int cells_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Samples a per-element field at the centre of each pixel of a
/// resolution x resolution grid covering the mesh bounding square.
/// Throws std::invalid_argument when values.size() != mesh.num_elements().
Image rasterize(const TriMesh& mesh, std::span<const double> values,
                int resolution);

}  // namespace eit
