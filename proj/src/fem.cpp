#include "bioconv/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>

namespace bioconv {

namespace {

QuadratureRule make_centroid_rule() {
  QuadratureRule rule;
  rule.points = {Bary(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)};
  rule.weights = {1.0};
  rule.degree = 1;
  return rule;
}

QuadratureRule make_three_point_rule() {
  QuadratureRule rule;
  const double a = 2.0 / 3.0;
  const double b = 1.0 / 6.0;
  rule.points = {Bary(a, b, b), Bary(b, a, b), Bary(b, b, a)};
  rule.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  rule.degree = 2;
  return rule;
}

// Radon's seven-point formula.
QuadratureRule make_seven_point_rule() {
  const double s15 = std::sqrt(15.0);
  const double a1 = (6.0 - s15) / 21.0;
  const double a2 = (6.0 + s15) / 21.0;
  const double w1 = (155.0 - s15) / 1200.0;
  const double w2 = (155.0 + s15) / 1200.0;
  QuadratureRule rule;
  rule.points = {Bary(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
                 Bary(1.0 - 2.0 * a1, a1, a1),
                 Bary(a1, 1.0 - 2.0 * a1, a1),
                 Bary(a1, a1, 1.0 - 2.0 * a1),
                 Bary(1.0 - 2.0 * a2, a2, a2),
                 Bary(a2, 1.0 - 2.0 * a2, a2),
                 Bary(a2, a2, 1.0 - 2.0 * a2)};
  rule.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
  rule.degree = 5;
  return rule;
}

// Symmetric rule from orbits: (weight, barycentric generator) pairs.
QuadratureRule make_orbit_rule(const std::vector<std::pair<double, Bary>>& orbits, int degree) {
  QuadratureRule rule;
  for (const auto& [w, g] : orbits) {
    std::vector<Bary> pts;
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& p : perms) {
      const Bary b(g[p[0]], g[p[1]], g[p[2]]);
      bool seen = false;
      for (const auto& q : pts) seen = seen || q == b;
      if (!seen) pts.push_back(b);
    }
    for (const auto& b : pts) {
      rule.points.push_back(b);
      rule.weights.push_back(w);
    }
  }
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  rule.degree = degree;
  return rule;
}

// Dunavant's 12-point degree-6 and 16-point degree-8 rules.
QuadratureRule make_twelve_point_rule() {
  return make_orbit_rule({{0.116786275726379, Bary(0.501426509658179, 0.249286745170910, 0.249286745170910)},
                          {0.050844906370207, Bary(0.873821971016996, 0.063089014491502, 0.063089014491502)},
                          {0.082851075618374, Bary(0.053145049844817, 0.310352451033784, 0.636502499121399)}},
                         6);
}

QuadratureRule make_sixteen_point_rule() {
  const double third = 1.0 / 3.0;
  return make_orbit_rule({{0.144315607677787, Bary(third, third, third)},
                          {0.095091634267285, Bary(0.081414823414554, 0.459292588292723, 0.459292588292723)},
                          {0.103217370534718, Bary(0.658861384496480, 0.170569307751760, 0.170569307751760)},
                          {0.032458497623198, Bary(0.898905543365938, 0.050547228317031, 0.050547228317031)},
                          {0.027230314174435, Bary(0.008394777409958, 0.263112829634638, 0.728492392955404)}},
                         8);
}

}  // namespace

const QuadratureRule& quadrature_rule(int degree) {
  static const QuadratureRule centroid = make_centroid_rule();
  static const QuadratureRule three = make_three_point_rule();
  static const QuadratureRule seven = make_seven_point_rule();
  static const QuadratureRule twelve = make_twelve_point_rule();
  static const QuadratureRule sixteen = make_sixteen_point_rule();
  switch (degree) {
    case 1:
      return centroid;
    case 2:
      return three;
    case 3:
    case 4:
    case 5:
      return seven;
    case 6:
      return twelve;
    case 7:
    case 8:
      return sixteen;
    default:
      throw std::invalid_argument("quadrature_rule: unsupported degree " + std::to_string(degree));
  }
}

P1Basis p1_basis(const Bary& bary) {
  return {{bary[0], bary[1], bary[2]}, {Vec2(-1.0, -1.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)}};
}

BubbleBasis bubble_basis(const Bary& bary) {
  const double l1 = bary[0], l2 = bary[1], l3 = bary[2];
  // d/dxi: l1 -> -1, l2 -> +1; d/deta: l1 -> -1, l3 -> +1.
  const Vec2 grad(27.0 * (l1 * l3 - l2 * l3), 27.0 * (l1 * l2 - l2 * l3));
  return {27.0 * l1 * l2 * l3, grad};
}

ElementGeometry element_geometry(const Mesh& mesh, int element) {
  if (element < 0 || element >= static_cast<int>(mesh.num_triangles())) {
    throw std::out_of_range("element_geometry: element id " + std::to_string(element) + " out of range");
  }
  const auto& tri = mesh.triangles[element];
  ElementGeometry g;
  for (int k = 0; k < 3; ++k) g.vertices[k] = mesh.nodes[tri[k]];
  g.jacobian.col(0) = g.vertices[1] - g.vertices[0];
  g.jacobian.col(1) = g.vertices[2] - g.vertices[0];
  const double det = g.jacobian.determinant();
  g.area = 0.5 * det;
  g.inv_jacobian_t = g.jacobian.inverse().transpose();
  const P1Basis ref = p1_basis(Bary(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0));
  for (int k = 0; k < 3; ++k) g.grad_lambda[k] = g.push_forward(ref.ref_grads[k]);
  return g;
}

LocalShapes local_shapes(const ElementGeometry& geom, const Bary& bary) {
  LocalShapes s;
  for (int k = 0; k < 3; ++k) {
    s.value[k] = bary[k];
    s.grad[k] = geom.grad_lambda[k];
  }
  const double l1 = bary[0], l2 = bary[1], l3 = bary[2];
  s.value[3] = 27.0 * l1 * l2 * l3;
  s.grad[3] = 27.0 * (l2 * l3 * geom.grad_lambda[0] + l1 * l3 * geom.grad_lambda[1] + l1 * l2 * geom.grad_lambda[2]);
  return s;
}

DofMap build_dof_map(const Mesh& mesh, SpaceKind kind) {
  DofMap map;
  map.kind = kind;
  map.num_nodes = static_cast<int>(mesh.num_nodes());
  map.num_cells = static_cast<int>(mesh.num_triangles());
  if (kind == SpaceKind::P1BubbleVector) {
    map.dofs_per_cell = 8;
    map.n_dofs = 2 * (map.num_nodes + map.num_cells);
    map.cell_dofs.reserve(static_cast<std::size_t>(8) * map.num_cells);
    for (int e = 0; e < map.num_cells; ++e) {
      const auto& tri = mesh.triangles[e];
      for (int s = 0; s < 4; ++s) {
        const int slot = s < 3 ? tri[s] : map.num_nodes + e;
        map.cell_dofs.push_back(2 * slot);
        map.cell_dofs.push_back(2 * slot + 1);
      }
    }
  } else {
    map.dofs_per_cell = 3;
    map.n_dofs = map.num_nodes;
    map.cell_dofs.reserve(static_cast<std::size_t>(3) * map.num_cells);
    for (const auto& tri : mesh.triangles) {
      map.cell_dofs.insert(map.cell_dofs.end(), tri.begin(), tri.end());
    }
  }
  return map;
}

Vector interpolate(const ScalarFunction& field, const DofMap& space, const Mesh& mesh, double t) {
  if (space.is_vector()) throw std::invalid_argument("interpolate: scalar field on vector space");
  Vector coeffs(space.n_dofs);
  for (int v = 0; v < space.num_nodes; ++v) coeffs[v] = field(mesh.nodes[v], t);
  return coeffs;
}

Vector interpolate(const VectorFunction& field, const DofMap& space, const Mesh& mesh, double t) {
  if (!space.is_vector()) throw std::invalid_argument("interpolate: vector field on scalar space");
  Vector coeffs = Vector::Zero(space.n_dofs);
  for (int v = 0; v < space.num_nodes; ++v) {
    const Vec2 value = field(mesh.nodes[v], t);
    coeffs[2 * v] = value.x();
    coeffs[2 * v + 1] = value.y();
  }
  return coeffs;
}

ScalarSample evaluate_scalar(const Vector& coeffs, const DofMap& space, int element, const LocalShapes& shapes) {
  ScalarSample out;
  const auto dofs = space.cell(element);
  for (int k = 0; k < 3; ++k) {
    const double c = coeffs[dofs[k]];
    out.value += c * shapes.value[k];
    out.grad += c * shapes.grad[k];
  }
  return out;
}

VectorSample evaluate_vector(const Vector& coeffs, const DofMap& space, int element, const LocalShapes& shapes) {
  VectorSample out;
  const auto dofs = space.cell(element);
  for (int s = 0; s < 4; ++s) {
    for (int k = 0; k < 2; ++k) {
      const double c = coeffs[dofs[2 * s + k]];
      out.value[k] += c * shapes.value[s];
      out.grad.row(k) += c * shapes.grad[s].transpose();
    }
  }
  return out;
}

namespace {

void check_evaluation_args(const Vector& coeffs, const DofMap& space, int element) {
  if (element < 0 || element >= space.num_cells) {
    throw std::out_of_range("evaluate: element id " + std::to_string(element) + " out of range");
  }
  if (coeffs.size() != space.n_dofs) {
    throw std::invalid_argument("evaluate: coefficient vector length " + std::to_string(coeffs.size()) +
                                " does not match " + std::to_string(space.n_dofs) + " dofs");
  }
}

}  // namespace

ScalarSample evaluate_scalar(const Vector& coeffs, const DofMap& space, const Mesh& mesh, int element,
                             const Bary& bary) {
  check_evaluation_args(coeffs, space, element);
  if (space.is_vector()) throw std::invalid_argument("evaluate_scalar: vector space");
  return evaluate_scalar(coeffs, space, element, local_shapes(element_geometry(mesh, element), bary));
}

VectorSample evaluate_vector(const Vector& coeffs, const DofMap& space, const Mesh& mesh, int element,
                             const Bary& bary) {
  check_evaluation_args(coeffs, space, element);
  if (!space.is_vector()) throw std::invalid_argument("evaluate_vector: scalar space");
  return evaluate_vector(coeffs, space, element, local_shapes(element_geometry(mesh, element), bary));
}

}  // namespace bioconv
