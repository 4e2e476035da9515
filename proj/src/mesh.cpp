#include "bioconv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace bioconv {

double Mesh::signed_area(std::size_t t) const {
  const auto& tri = triangles.at(t);
  const Point& a = nodes[tri[0]];
  const Point& b = nodes[tri[1]];
  const Point& c = nodes[tri[2]];
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

bool Mesh::is_boundary_node(int node) const {
  const int stride = n + 1;
  const int i = node % stride;
  const int j = node / stride;
  return i == 0 || j == 0 || i == n || j == n;
}

Mesh build_unit_square_mesh(int n) {
  if (n < 1) {
    throw std::invalid_argument("build_unit_square_mesh: invalid subdivision n=" + std::to_string(n));
  }
  Mesh mesh;
  mesh.n = n;
  mesh.h = std::sqrt(2.0) / n;

  const int stride = n + 1;
  mesh.nodes.reserve(static_cast<std::size_t>(stride) * stride);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      mesh.nodes.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    }
  }

  mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int bl = j * stride + i;
      const int br = bl + 1;
      const int tl = bl + stride;
      const int tr = tl + 1;
      mesh.triangles.push_back({bl, br, tr});
      mesh.triangles.push_back({bl, tr, tl});
    }
  }

  // Counterclockwise walk: bottom, right, top, left.
  mesh.boundary_edges.reserve(4 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    mesh.boundary_edges.push_back({i, i + 1, Side::Bottom});
  }
  for (int j = 0; j < n; ++j) {
    mesh.boundary_edges.push_back({j * stride + n, (j + 1) * stride + n, Side::Right});
  }
  for (int i = n; i > 0; --i) {
    mesh.boundary_edges.push_back({n * stride + i, n * stride + i - 1, Side::Top});
  }
  for (int j = n; j > 0; --j) {
    mesh.boundary_edges.push_back({j * stride, (j - 1) * stride, Side::Left});
  }
  return mesh;
}

std::vector<std::pair<std::array<int, 2>, int>> edge_multiplicity(const Mesh& mesh) {
  std::map<std::array<int, 2>, int> count;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  }
  return {count.begin(), count.end()};
}

std::size_t count_edges(const Mesh& mesh) { return edge_multiplicity(mesh).size(); }

std::vector<int> locate_boundary_dofs(const Mesh& mesh, SpaceKind kind) {
  std::vector<int> dofs;
  for (int v = 0; v < static_cast<int>(mesh.num_nodes()); ++v) {
    if (!mesh.is_boundary_node(v)) continue;
    if (kind == SpaceKind::P1BubbleVector) {
      dofs.push_back(2 * v);
      dofs.push_back(2 * v + 1);
    } else {
      dofs.push_back(v);
    }
  }
  return dofs;
}

}  // namespace bioconv
