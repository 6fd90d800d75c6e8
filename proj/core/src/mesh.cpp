#include "eit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace eit {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                (c.x() - a.x()) * (b.y() - a.y()));
}

double polar_angle(const Vec2& p) {
  double a = std::atan2(p.y(), p.x());
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a;
}

double angular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

}  // namespace

TriMesh TriMesh::from_geometry(std::vector<Vec2> nodes,
                               std::vector<Triangle> triangles) {
  if (nodes.size() < 3 || triangles.empty()) {
    throw std::invalid_argument("mesh needs at least one triangle");
  }
  TriMesh mesh;
  mesh.nodes_ = std::move(nodes);
  mesh.triangles_ = std::move(triangles);

  const auto n_nodes = static_cast<int>(mesh.nodes_.size());
  const std::size_t n_elem = mesh.triangles_.size();
  mesh.centroids_.resize(n_elem);
  mesh.areas_.resize(n_elem);

  for (std::size_t k = 0; k < n_elem; ++k) {
    auto& t = mesh.triangles_[k];
    for (int v : t) {
      if (v < 0 || v >= n_nodes) {
        throw std::invalid_argument("triangle " + std::to_string(k) +
                                    " references missing node " +
                                    std::to_string(v));
      }
    }
    const auto& a = mesh.nodes_[t[0]];
    const auto& b = mesh.nodes_[t[1]];
    const auto& c = mesh.nodes_[t[2]];
    double area = signed_area(a, b, c);
    if (area < 0.0) {
      std::swap(t[1], t[2]);
      area = -area;
    }
    if (!(area > 0.0)) {
      throw std::invalid_argument("triangle " + std::to_string(k) +
                                  " is degenerate");
    }
    mesh.areas_[k] = area;
    mesh.centroids_[k] = (a + b + c) / 3.0;
  }

  // Undirected edge -> owning triangles.
  std::map<std::pair<int, int>, std::vector<int>> owners;
  for (std::size_t k = 0; k < n_elem; ++k) {
    const auto& t = mesh.triangles_[k];
    for (int e = 0; e < 3; ++e) {
      int a = t[e];
      int b = t[(e + 1) % 3];
      owners[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(k));
    }
  }

  mesh.neighbors_.assign(n_elem, {});
  std::map<int, int> next_on_boundary;
  for (const auto& [edge, tris] : owners) {
    if (tris.size() == 2) {
      mesh.neighbors_[tris[0]].push_back(tris[1]);
      mesh.neighbors_[tris[1]].push_back(tris[0]);
    } else if (tris.size() == 1) {
      // Orient along the owning triangle so the loop runs counter-clockwise.
      const auto& t = mesh.triangles_[tris[0]];
      for (int e = 0; e < 3; ++e) {
        int a = t[e];
        int b = t[(e + 1) % 3];
        if (std::min(a, b) == edge.first && std::max(a, b) == edge.second) {
          if (!next_on_boundary.emplace(a, b).second) {
            throw std::invalid_argument("boundary is not a simple loop");
          }
        }
      }
    } else {
      throw std::invalid_argument("non-manifold edge in mesh");
    }
  }
  for (auto& nb : mesh.neighbors_) std::sort(nb.begin(), nb.end());

  if (next_on_boundary.empty()) {
    throw std::invalid_argument("mesh has no boundary");
  }
  const int start = next_on_boundary.begin()->first;
  int current = start;
  do {
    auto it = next_on_boundary.find(current);
    if (it == next_on_boundary.end()) {
      throw std::invalid_argument("boundary loop is open");
    }
    mesh.boundary_edges_.push_back({current, it->second});
    current = it->second;
  } while (current != start &&
           mesh.boundary_edges_.size() <= next_on_boundary.size());
  if (mesh.boundary_edges_.size() != next_on_boundary.size()) {
    throw std::invalid_argument("boundary consists of more than one loop");
  }
  return mesh;
}

std::vector<int> TriMesh::boundary_nodes() const {
  std::vector<int> out;
  out.reserve(boundary_edges_.size());
  for (const auto& e : boundary_edges_) out.push_back(e[0]);
  return out;
}

std::vector<int> TriMesh::boundary_elements() const {
  std::map<std::pair<int, int>, bool> bnd;
  for (const auto& e : boundary_edges_) {
    bnd[{std::min(e[0], e[1]), std::max(e[0], e[1])}] = true;
  }
  std::vector<int> out;
  for (std::size_t k = 0; k < triangles_.size(); ++k) {
    const auto& t = triangles_[k];
    for (int e = 0; e < 3; ++e) {
      int a = t[e];
      int b = t[(e + 1) % 3];
      if (bnd.contains({std::min(a, b), std::max(a, b)})) {
        out.push_back(static_cast<int>(k));
        break;
      }
    }
  }
  return out;
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (double a : areas_) s += a;
  return s;
}

double TriMesh::max_boundary_edge_length() const {
  double h = 0.0;
  for (const auto& e : boundary_edges_) {
    h = std::max(h, (nodes_[e[0]] - nodes_[e[1]]).norm());
  }
  return h;
}

double TriMesh::max_node_radius() const {
  double r = 0.0;
  for (const auto& p : nodes_) r = std::max(r, p.norm());
  return r;
}

int disk_ring_count(std::size_t target_elements) {
  const double t = static_cast<double>(target_elements);
  const int lo = std::max(1, static_cast<int>(std::floor(std::sqrt(t / 6.0))));
  const int hi = lo + 1;
  auto rel = [t](int n) { return std::abs(6.0 * n * n - t) / t; };
  return rel(lo) <= rel(hi) ? lo : hi;
}

TriMesh generate_disk_mesh(double radius, std::size_t target_elements) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("disk radius must be positive");
  }
  if (target_elements < 64) {
    throw std::invalid_argument("target_elements must be at least 64");
  }
  const int rings = disk_ring_count(target_elements);
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<Vec2> nodes;
  nodes.reserve(static_cast<std::size_t>(3 * rings * (rings + 1) + 1));
  nodes.emplace_back(0.0, 0.0);
  auto ring_start = [](int i) { return i == 0 ? 0 : 1 + 3 * i * (i - 1); };
  auto ring_size = [](int i) { return i == 0 ? 1 : 6 * i; };

  for (int i = 1; i <= rings; ++i) {
    const double r = (i == rings) ? radius : radius * i / rings;
    const int m = ring_size(i);
    for (int k = 0; k < m; ++k) {
      const double a = two_pi * k / m;
      nodes.emplace_back(r * std::cos(a), r * std::sin(a));
    }
  }

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(6 * rings * rings));
  for (int k = 0; k < 6; ++k) {
    tris.push_back({0, 1 + k, 1 + (k + 1) % 6});
  }
  // Zip ring i-1 to ring i, always closing the quad across its shorter
  // diagonal; ties fall back to angular order.
  for (int i = 2; i <= rings; ++i) {
    const int m_in = ring_size(i - 1);
    const int m_out = ring_size(i);
    const int s_in = ring_start(i - 1);
    const int s_out = ring_start(i);
    auto in = [&](int a) { return s_in + a % m_in; };
    auto out = [&](int b) { return s_out + b % m_out; };
    int a = 0;
    int b = 0;
    while (a < m_in || b < m_out) {
      bool advance_outer;
      if (a == m_in) {
        advance_outer = true;
      } else if (b == m_out) {
        advance_outer = false;
      } else {
        const double d_outer = (nodes[in(a)] - nodes[out(b + 1)]).squaredNorm();
        const double d_inner = (nodes[out(b)] - nodes[in(a + 1)]).squaredNorm();
        const double tol = 1e-12 * radius * radius;
        if (std::abs(d_outer - d_inner) > tol) {
          advance_outer = d_outer < d_inner;
        } else {
          advance_outer = static_cast<double>(b + 1) / m_out <=
                          static_cast<double>(a + 1) / m_in;
        }
      }
      if (advance_outer) {
        tris.push_back({in(a), out(b), out(b + 1)});
        ++b;
      } else {
        tris.push_back({in(a), out(b), in(a + 1)});
        ++a;
      }
    }
  }
  return TriMesh::from_geometry(std::move(nodes), std::move(tris));
}

ElectrodeLayout place_electrodes_at(const TriMesh& mesh,
                                    std::span<const double> angles) {
  const int count = static_cast<int>(angles.size());
  if (count < 4) {
    throw std::invalid_argument("at least 4 electrodes are required");
  }
  const auto boundary = mesh.boundary_nodes();
  if (boundary.size() < angles.size()) {
    throw std::invalid_argument("mesh boundary has fewer nodes (" +
                                std::to_string(boundary.size()) +
                                ") than electrodes (" +
                                std::to_string(count) + ")");
  }
  std::vector<double> node_angle(boundary.size());
  for (std::size_t b = 0; b < boundary.size(); ++b) {
    node_angle[b] = polar_angle(mesh.nodes()[boundary[b]]);
  }

  ElectrodeLayout layout;
  for (int e = 0; e < count; ++e) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < boundary.size(); ++b) {
      const double d = angular_distance(node_angle[b], angles[e]);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = b;
      }
    }
    const int node = boundary[best];
    if (std::find(layout.node_ids.begin(), layout.node_ids.end(), node) !=
        layout.node_ids.end()) {
      throw std::invalid_argument("electrodes " + std::to_string(e) +
                                  " and an earlier electrode snap to the "
                                  "same boundary node; mesh too coarse");
    }
    layout.node_ids.push_back(node);
    layout.angles.push_back(node_angle[best]);
  }
  return layout;
}

ElectrodeLayout place_electrodes(const TriMesh& mesh, int count) {
  if (count < 4) {
    throw std::invalid_argument("at least 4 electrodes are required");
  }
  std::vector<double> ideal(static_cast<std::size_t>(count));
  for (int e = 0; e < count; ++e) {
    ideal[e] = 2.0 * std::numbers::pi * e / count;
  }
  return place_electrodes_at(mesh, ideal);
}

}  // namespace eit
