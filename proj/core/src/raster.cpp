#include "eit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace eit {

namespace {

bool contains(const TriMesh& mesh, int k, const Vec2& p) {
  const auto& t = mesh.triangles()[k];
  const auto& a = mesh.nodes()[t[0]];
  const auto& b = mesh.nodes()[t[1]];
  const auto& c = mesh.nodes()[t[2]];
  // Triangles are counter-clockwise; allow a small relative slack so points
  // on shared edges are found.
  const double eps = -1e-12 * mesh.areas()[k];
  auto edge = [](const Vec2& u, const Vec2& v, const Vec2& q) {
    return 0.5 * ((v.x() - u.x()) * (q.y() - u.y()) -
                  (q.x() - u.x()) * (v.y() - u.y()));
  };
  return edge(a, b, p) >= eps && edge(b, c, p) >= eps && edge(c, a, p) >= eps;
}

}  // namespace

TriangleLocator::TriangleLocator(const TriMesh& mesh) : mesh_(&mesh) {
  Vec2 lo(std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& p : mesh.nodes()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double span = std::max(hi.x() - lo.x(), hi.y() - lo.y());
  cells_ = std::max(1, static_cast<int>(std::sqrt(
                           static_cast<double>(mesh.num_elements()) / 2.0)));
  cell_ = span / cells_ * (1.0 + 1e-9);
  lo_ = lo;
  buckets_.assign(static_cast<std::size_t>(cells_) * cells_, {});

  auto cell_of = [&](double v, double origin) {
    return std::clamp(static_cast<int>((v - origin) / cell_), 0, cells_ - 1);
  };
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto& t = mesh.triangles()[k];
    Vec2 tlo = mesh.nodes()[t[0]];
    Vec2 thi = tlo;
    for (int v : t) {
      tlo = tlo.cwiseMin(mesh.nodes()[v]);
      thi = thi.cwiseMax(mesh.nodes()[v]);
    }
    for (int i = cell_of(tlo.x(), lo_.x()); i <= cell_of(thi.x(), lo_.x()); ++i) {
      for (int j = cell_of(tlo.y(), lo_.y()); j <= cell_of(thi.y(), lo_.y()); ++j) {
        buckets_[static_cast<std::size_t>(j) * cells_ + i].push_back(
            static_cast<int>(k));
      }
    }
  }
}

std::optional<int> TriangleLocator::locate(const Vec2& p) const {
  const double fx = (p.x() - lo_.x()) / cell_;
  const double fy = (p.y() - lo_.y()) / cell_;
  if (fx < 0.0 || fy < 0.0 || fx >= cells_ || fy >= cells_) return std::nullopt;
  const auto& bucket =
      buckets_[static_cast<std::size_t>(fy) * cells_ + static_cast<std::size_t>(fx)];
  for (int k : bucket) {
    if (contains(*mesh_, k, p)) return k;
  }
  return std::nullopt;
}

Vec2 Image::pixel_center(int row, int col) const {
  const double px = 2.0 * extent / width;
  const double py = 2.0 * extent / height;
  return {-extent + (col + 0.5) * px, extent - (row + 0.5) * py};
}

Image rasterize(const TriMesh& mesh, std::span<const double> values,
                int resolution) {
  if (values.size() != mesh.num_elements()) {
    throw std::invalid_argument("rasterize: expected " +
                                std::to_string(mesh.num_elements()) +
                                " element values, got " +
                                std::to_string(values.size()));
  }
  if (resolution < 1) {
    throw std::invalid_argument("rasterize: resolution must be positive");
  }
  Image img;
  img.width = resolution;
  img.height = resolution;
  img.extent = mesh.max_node_radius();
  img.pixels.assign(static_cast<std::size_t>(resolution) * resolution,
                    kOutsideDomain);
  const TriangleLocator locator(mesh);
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      if (auto k = locator.locate(img.pixel_center(r, c))) {
        img.at(r, c) = values[*k];
      }
    }
  }
  return img;
}

}  // namespace eit
