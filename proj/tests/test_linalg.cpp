#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>

#include "bioconv/assembly.hpp"
#include "bioconv/linalg.hpp"

using namespace bioconv;

namespace {

SparseMatrix sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

// Velocity/pressure saddle system on an n=2 mesh with inhomogeneous boundary
// values and a zero-mean pressure.
struct Saddle {
  ConstrainedSystem system;
  int nu = 0;
  std::vector<int> bubbles;
};

Saddle make_saddle(int n) {
  const Mesh mesh = build_unit_square_mesh(n);
  const DofMap v = build_dof_map(mesh, SpaceKind::P1BubbleVector);
  const DofMap p = build_dof_map(mesh, SpaceKind::P1PressureZeroMean);
  const DofMap s = build_dof_map(mesh, SpaceKind::P1Scalar);
  const SparseMatrix a = assemble_mass(v, mesh) * 2.0 + assemble_stiffness(v, mesh, 1.0);
  const SparseMatrix d = assemble_div_coupling(v, p, mesh);
  std::vector<Triplet> t;
  append_block(t, a, 0, 0);
  append_block(t, SparseMatrix(d.transpose()), 0, v.n_dofs, -1.0);
  append_block(t, d, v.n_dofs, 0);
  Saddle out;
  out.nu = v.n_dofs;
  auto& sys = out.system;
  sys.matrix.resize(v.n_dofs + p.n_dofs, v.n_dofs + p.n_dofs);
  sys.matrix.setFromTriplets(t.begin(), t.end());
  sys.rhs = Eigen::VectorXd::LinSpaced(sys.matrix.rows(), -1.0, 2.0);
  for (int dof : locate_boundary_dofs(mesh, SpaceKind::P1BubbleVector)) sys.add_dirichlet(dof, 0.1 * (dof % 5));
  MeanConstraint mean;
  mean.weights = Eigen::VectorXd::Zero(sys.matrix.rows());
  mean.weights.tail(p.n_dofs) = integral_weights(s, mesh);
  sys.mean_constraints.push_back(mean);
  for (int e = 0; e < static_cast<int>(mesh.num_triangles()); ++e) {
    const int slot = static_cast<int>(mesh.num_nodes()) + e;
    sys.local_blocks.push_back({2 * slot, 2 * slot + 1});
  }
  return out;
}

// Row-replacement Dirichlet and a bordered dense matrix, solved by full
// pivoting LU.
Eigen::VectorXd dense_solve(const ConstrainedSystem& sys) {
  const int n = static_cast<int>(sys.matrix.rows());
  const int m = static_cast<int>(sys.mean_constraints.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = Eigen::MatrixXd(sys.matrix);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + m);
  b.head(n) = sys.rhs;
  for (int c = 0; c < m; ++c) {
    k.block(0, n + c, n, 1) = sys.mean_constraints[c].weights;
    k.block(n + c, 0, 1, n) = sys.mean_constraints[c].weights.transpose();
    b[n + c] = sys.mean_constraints[c].value;
  }
  for (const auto& [dof, value] : sys.dirichlet) {
    k.row(dof).setZero();
    k(dof, dof) = 1.0;
    b[dof] = value;
    for (int c = 0; c < m; ++c) k(dof, n + c) = 0.0;
  }
  return k.fullPivLu().solve(b);
}

}  // namespace

TEST_CASE("identity") {
  ConstrainedSystem sys;
  sys.matrix = sparse(Eigen::MatrixXd::Identity(3, 3));
  sys.rhs = Eigen::Vector3d(1, 2, 3);
  const SolveResult r = solve(sys);
  CHECK((r.x - sys.rhs).norm() <= 1e-15);
  CHECK(r.relative_residual <= 1e-15);
}

TEST_CASE("two by two") {
  ConstrainedSystem sys;
  Eigen::Matrix2d a;
  a << 2, 1, 1, 3;
  sys.matrix = sparse(a);
  sys.rhs = Eigen::Vector2d(3, 4);
  CHECK((solve(sys).x - Eigen::Vector2d(1, 1)).norm() <= 1e-14);
}

TEST_CASE("Dirichlet elimination on a tridiagonal system") {
  Eigen::Matrix3d a;
  a << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  ConstrainedSystem sys;
  sys.matrix = sparse(a);
  sys.rhs = Eigen::Vector3d(0, 0, 0);
  sys.add_dirichlet(0, 1.0);
  sys.add_dirichlet(2, 3.0);
  CHECK((solve(sys).x - Eigen::Vector3d(1, 2, 3)).norm() <= 1e-14);

  SparseMatrix m = sparse(a);
  Eigen::VectorXd b = Eigen::Vector3d::Zero();
  apply_dirichlet(m, b, {{0, 1.0}});
  CHECK(Eigen::MatrixXd(m) == Eigen::MatrixXd(sparse((Eigen::Matrix3d() << 1, 0, 0, 0, 2, -1, 0, -1, 2).finished())));
  CHECK(b == Eigen::Vector3d(1, 1, 0));
}

TEST_CASE("mean constraint on a singular Neumann-like system") {
  // 1D Laplacian with pure Neumann ends; x = (0, ...) fixed by mean zero.
  const int n = 6;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    a(i, i) += 1;
    a(i + 1, i + 1) += 1;
    a(i, i + 1) -= 1;
    a(i + 1, i) -= 1;
  }
  ConstrainedSystem sys;
  sys.matrix = sparse(a);
  sys.rhs = Eigen::VectorXd::Zero(n);
  sys.rhs[0] = 1.0;
  sys.rhs[n - 1] = -1.0;
  sys.mean_constraints.push_back({Eigen::VectorXd::Ones(n), 0.0});
  const SolveResult r = solve(sys);
  CHECK(std::abs(r.x.sum()) <= 1e-12);
  CHECK((a * r.x - sys.rhs).norm() <= 1e-12);
  CHECK(r.multipliers.size() == 1);
  CHECK(std::abs(r.multipliers[0]) <= 1e-12);
}

TEST_CASE("saddle system agrees with a dense oracle") {
  const Saddle s = make_saddle(2);
  const Eigen::VectorXd oracle = dense_solve(s.system);
  const int n = static_cast<int>(s.system.matrix.rows());

  ConstrainedSystem plain = s.system;
  plain.local_blocks.clear();
  const SolveResult direct = solve(plain);
  const SolveResult condensed = solve(s.system);
  CHECK((direct.x - oracle.head(n)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((condensed.x - oracle.head(n)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(direct.relative_residual <= kSolveTolerance);
  CHECK(condensed.relative_residual <= kSolveTolerance);
  CHECK(std::abs(s.system.mean_constraints[0].weights.dot(condensed.x)) <= 1e-13);
}

TEST_CASE("condensation matches the plain path on a larger mesh") {
  const Saddle s = make_saddle(6);
  ConstrainedSystem plain = s.system;
  plain.local_blocks.clear();
  CHECK((solve(plain).x - solve(s.system).x).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("constraint errors") {
  ConstrainedSystem sys;
  sys.add_dirichlet(1, 2.0);
  sys.add_dirichlet(1, 2.0);
  CHECK_THROWS_AS(sys.add_dirichlet(1, 3.0), std::invalid_argument);

  Saddle s = make_saddle(2);
  const int boundary = s.system.dirichlet.begin()->first;
  s.system.mean_constraints[0].weights[boundary] = 1.0;
  CHECK_THROWS_WITH_AS(solve(s.system), doctest::Contains("inconsistent constraints"), std::invalid_argument);

  Saddle t = make_saddle(2);
  t.system.add_dirichlet(t.system.local_blocks[0][0], 0.0);
  CHECK_THROWS_AS(solve(t.system), std::invalid_argument);
}

TEST_CASE("singular matrix reported") {
  Eigen::Matrix3d a;
  a << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  ConstrainedSystem sys;
  sys.matrix = sparse(a);
  sys.rhs = Eigen::Vector3d(1, 1, 1);
  CHECK_THROWS_WITH_AS(solve(sys), doctest::Contains("singular"), SolverError);

  // Pressure without its mean constraint is only determined up to a constant.
  Saddle s = make_saddle(2);
  s.system.mean_constraints.clear();
  CHECK_THROWS_AS(solve(s.system), SolverError);
}

TEST_CASE("deterministic") {
  const Saddle s = make_saddle(4);
  const Eigen::VectorXd a = solve(s.system).x, b = solve(s.system).x;
  CHECK(a == b);
}

TEST_CASE("helpers") {
  Eigen::Matrix2d a;
  a << 1, -5, 2, 0;
  CHECK(max_abs(sparse(a)) == 5.0);
  std::vector<Triplet> t;
  append_block(t, sparse(a), 1, 2, 2.0);
  SparseMatrix m(3, 4);
  m.setFromTriplets(t.begin(), t.end());
  CHECK(m.coeff(1, 3) == -10.0);
  CHECK(m.coeff(2, 2) == 4.0);
  const SparseMatrix k = augment_with_constraints(sparse(a), {{Eigen::Vector2d(1, 1), 0.0}});
  CHECK(k.rows() == 3);
  CHECK(k.coeff(2, 0) == 1.0);
  CHECK(k.coeff(0, 2) == 1.0);
  CHECK(k.coeff(2, 2) == 0.0);
}
