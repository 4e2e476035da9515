#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace bioconv {

using Point = Eigen::Vector2d;

enum class Side { Bottom, Right, Top, Left };

struct BoundaryEdge {
  int a;
  int b;
  Side side;
};

/// Uniform triangulation of the unit square. Immutable once built.
///
/// Nodes are row-major from (0,0): node (i,j) has index j*(n+1)+i. Cell (i,j)
/// is split along its lower-left to upper-right diagonal into triangles
/// (bl, br, tr) and (bl, tr, tl), stored in that order, cells row-major.
struct Mesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  int n = 0;
  double h = 0.0;  // max element diameter

  [[nodiscard]] std::size_t num_nodes() const { return nodes.size(); }
  [[nodiscard]] std::size_t num_triangles() const { return triangles.size(); }

  /// Grid spacing 1/n (the "h" used to label convergence tables).
  [[nodiscard]] double spacing() const { return 1.0 / n; }

  [[nodiscard]] double signed_area(std::size_t t) const;
  [[nodiscard]] bool is_boundary_node(int node) const;
};

Mesh build_unit_square_mesh(int n);

/// Number of distinct (undirected) edges.
std::size_t count_edges(const Mesh& mesh);

/// Number of triangles sharing each undirected edge, keyed by (min,max) node.
std::vector<std::pair<std::array<int, 2>, int>> edge_multiplicity(const Mesh& mesh);

/// Finite element space layouts built over a Mesh.
///
/// Scalar spaces use one DOF per node. The vector P1+bubble space numbers
/// scalar slots as [nodes..., one bubble per triangle...] and interleaves the
/// two components, so component k of slot s is DOF 2*s+k.
enum class SpaceKind { P1Scalar, P1ScalarZeroMean, P1BubbleVector, P1PressureZeroMean };

/// DOFs whose basis functions do not vanish on the boundary. Sorted ascending.
std::vector<int> locate_boundary_dofs(const Mesh& mesh, SpaceKind kind);

}  // namespace bioconv
