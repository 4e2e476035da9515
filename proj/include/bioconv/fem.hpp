#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bioconv/mesh.hpp"

namespace bioconv {

/// Barycentric coordinates (lambda_1, lambda_2, lambda_3).
using Bary = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;

/// Symmetric rule on a triangle; weights are normalized to sum to 1, so
/// integral ~= area * sum_q w_q f(x_q).
struct QuadratureRule {
  std::vector<Bary> points;
  std::vector<double> weights;
  int degree = 0;

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Symmetric rules exact for degree 1 (centroid), 2 (3 points), 5 (7 points),
/// 6 (12 points) and 8 (16 points). Degrees 3, 4 and 7 return the next rule
/// up. Anything else throws.
const QuadratureRule& quadrature_rule(int degree);

inline constexpr int kDefaultQuadratureDegree = 5;
/// Bubble times bubble, and bubble wind times bubble gradient times bubble.
inline constexpr int kMassQuadratureDegree = 6;
inline constexpr int kConvectionQuadratureDegree = 8;

struct P1Basis {
  std::array<double, 3> values;
  std::array<Vec2, 3> ref_grads;  // w.r.t. reference coordinates (xi, eta)
};
P1Basis p1_basis(const Bary& bary);

/// Cubic bubble 27*l1*l2*l3, equal to 1 at the centroid.
struct BubbleBasis {
  double value;
  Vec2 ref_grad;
};
BubbleBasis bubble_basis(const Bary& bary);

/// Affine map from the reference triangle (0,0),(1,0),(0,1).
struct ElementGeometry {
  std::array<Point, 3> vertices;
  Mat2 jacobian;        // columns p1-p0, p2-p0
  Mat2 inv_jacobian_t;  // J^{-T}
  double area = 0.0;
  std::array<Vec2, 3> grad_lambda;  // physical gradients of the barycentrics

  [[nodiscard]] Point map(const Bary& bary) const {
    return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2];
  }
  [[nodiscard]] Vec2 push_forward(const Vec2& ref_grad) const { return inv_jacobian_t * ref_grad; }
};

ElementGeometry element_geometry(const Mesh& mesh, int element);

/// The four local P1+bubble scalar shape functions (three hats, then the
/// bubble) with physical gradients. Scalar P1 spaces use the first three.
struct LocalShapes {
  std::array<double, 4> value;
  std::array<Vec2, 4> grad;
};
LocalShapes local_shapes(const ElementGeometry& geom, const Bary& bary);

struct DofMap {
  SpaceKind kind = SpaceKind::P1Scalar;
  int n_dofs = 0;
  int dofs_per_cell = 0;
  int num_nodes = 0;
  int num_cells = 0;
  std::vector<int> cell_dofs;  // flat, dofs_per_cell entries per triangle

  [[nodiscard]] std::span<const int> cell(int element) const {
    return {cell_dofs.data() + static_cast<std::size_t>(element) * dofs_per_cell,
            static_cast<std::size_t>(dofs_per_cell)};
  }
  [[nodiscard]] bool is_vector() const { return kind == SpaceKind::P1BubbleVector; }
  [[nodiscard]] bool has_zero_mean() const {
    return kind == SpaceKind::P1ScalarZeroMean || kind == SpaceKind::P1PressureZeroMean;
  }
};

DofMap build_dof_map(const Mesh& mesh, SpaceKind kind);

using ScalarFunction = std::function<double(const Point&, double)>;
using VectorFunction = std::function<Vec2(const Point&, double)>;

/// Nodal interpolation. Bubble coefficients are set to zero.
Vector interpolate(const ScalarFunction& field, const DofMap& space, const Mesh& mesh, double t);
Vector interpolate(const VectorFunction& field, const DofMap& space, const Mesh& mesh, double t);

struct ScalarSample {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
};

/// grad(k, d) = d u_k / d x_d.
struct VectorSample {
  Vec2 value = Vec2::Zero();
  Mat2 grad = Mat2::Zero();
};

ScalarSample evaluate_scalar(const Vector& coeffs, const DofMap& space, const Mesh& mesh, int element,
                             const Bary& bary);
VectorSample evaluate_vector(const Vector& coeffs, const DofMap& space, const Mesh& mesh, int element,
                             const Bary& bary);

// Variants for hot loops that already hold the element's shapes.
ScalarSample evaluate_scalar(const Vector& coeffs, const DofMap& space, int element, const LocalShapes& shapes);
VectorSample evaluate_vector(const Vector& coeffs, const DofMap& space, int element, const LocalShapes& shapes);

}  // namespace bioconv
