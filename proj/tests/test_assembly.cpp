#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "bioconv/assembly.hpp"
#include "bioconv/manufactured.hpp"
#include "oracle.hpp"

using namespace bioconv;

namespace {

Mesh reference_triangle() {
  Mesh m;
  m.nodes = {Point(0, 0), Point(1, 0), Point(0, 1)};
  m.triangles = {{0, 1, 2}};
  m.n = 1;
  m.h = std::sqrt(2.0);
  return m;
}

Mesh jittered(int n, unsigned seed) {
  Mesh m = build_unit_square_mesh(n);
  oracle::jitter(m, 0.3, seed);
  return m;
}

double max_diff(const SparseMatrix& a, const Eigen::MatrixXd& b) { return (Eigen::MatrixXd(a) - b).cwiseAbs().maxCoeff(); }

Vector random_vector(int n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

double p1_value(const Mesh& m, const Vector& c, int e, const Bary& b) {
  return b[0] * c[m.triangles[e][0]] + b[1] * c[m.triangles[e][1]] + b[2] * c[m.triangles[e][2]];
}

}  // namespace

TEST_CASE("local matrices on the reference triangle") {
  const Mesh m = reference_triangle();
  const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
  Eigen::Matrix3d mass, stiff;
  mass << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  mass /= 24.0;
  stiff << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  stiff *= 0.5;
  CHECK(max_diff(assemble_mass(s, m), mass) <= 1e-13);
  CHECK(max_diff(assemble_stiffness(s, m), stiff) <= 1e-13);

  const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
  const Vector load = assemble_load([](const Point&, double) { return Vec2(1.0, 1.0); }, v, m, 0.0);
  CHECK(std::abs(load[6] - 0.225) <= 1e-13);
  CHECK(std::abs(load[7] - 0.225) <= 1e-13);
  CHECK(std::abs(load[0] - 1.0 / 6.0) <= 1e-13);
}

TEST_CASE("mass matrices against the exact oracle") {
  for (unsigned seed : {1u, 2u}) {
    const Mesh m = seed == 1 ? build_unit_square_mesh(2) : jittered(3, seed);
    CHECK(max_diff(assemble_mass(build_dof_map(m, SpaceKind::P1Scalar), m), oracle::mass(m, true)) <= 1e-14);
    CHECK(max_diff(assemble_mass(build_dof_map(m, SpaceKind::P1BubbleVector), m), oracle::mass(m, false)) <= 1e-14);
  }
}

TEST_CASE("stiffness with polynomial weights is exact") {
  const Mesh m = jittered(2, 3u);
  const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
  const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
  const Vector c = random_vector(s.n_dofs, 11u, 0.0, 1.0);

  CHECK(max_diff(assemble_stiffness(v, m, 2.5), oracle::stiffness(m, false, [](int, const Bary&) { return 2.5; }, 4) * 1.0) <=
        1e-13);
  CHECK(max_diff(assemble_stiffness(s, m, 1.0), oracle::stiffness(m, true, [](int, const Bary&) { return 1.0; }, 2)) <=
        1e-13);

  ModelParams params;
  params.viscosity = ViscosityLaw::affine(1.0, 0.1);
  const SparseMatrix a = assemble_stiffness_weighted(v, m, viscosity_weight(params, c, s));
  const auto w = [&](int e, const Bary& b) { return 1.0 + 0.1 * p1_value(m, c, e, b); };
  CHECK(max_diff(a, oracle::stiffness(m, false, w, 6)) <= 1e-13);
}

TEST_CASE("stiffness with exponential weight is consistent") {
  // exp(c_h) is not a polynomial. The bubble gradient products use up four
  // of the rule's five degrees, so only the linear part of the weight is
  // integrated exactly and the error on O(1) entries shrinks like h^2.
  ModelParams params;
  params.viscosity = ViscosityLaw::exponential();
  double previous = 0.0;
  for (int n : {2, 4, 8}) {
    const Mesh m = build_unit_square_mesh(n);
    const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
    const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
    const Vector c = interpolate(ExactSolution::concentration, s, m, 0.0);
    const SparseMatrix a = assemble_stiffness_weighted(v, m, viscosity_weight(params, c, s));
    const double d = max_diff(a, oracle::stiffness(m, false, [&](int e, const Bary& b) { return std::exp(p1_value(m, c, e, b)); }, 16));
    MESSAGE("n=" << n << " exp-weight stiffness vs refined oracle: " << d);
    if (n > 4) CHECK(d < previous / 3.0);
    previous = d;
  }
}

TEST_CASE("symmetric-gradient stiffness") {
  const Mesh m = jittered(2, 5u);
  const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
  const SparseMatrix a =
      assemble_stiffness_weighted(v, m, [](int, const Bary&, const Point&) { return 1.0; }, ViscousForm::SymmetricGradient);
  // D(phi e_k) : D(psi e_l) = 1/2 delta_kl grad phi . grad psi + 1/2 d_l phi d_k psi.
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(v.n_dofs, v.n_dofs);
  for (int e = 0; e < static_cast<int>(m.num_triangles()); ++e) {
    const oracle::Triangle t = oracle::triangle(m, e);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const auto gi = oracle::gradient(oracle::shape(i), t), gj = oracle::gradient(oracle::shape(j), t);
        const double dot = (gi[0] * gj[0] + gi[1] * gj[1]).integrate(t.area);
        for (int k = 0; k < 2; ++k) {
          for (int l = 0; l < 2; ++l) {
            const double v_kl = 0.5 * (k == l ? dot : 0.0) + 0.5 * (gj[k] * gi[l]).integrate(t.area);
            o(oracle::vector_dof(m, e, i, k), oracle::vector_dof(m, e, j, l)) += v_kl;
          }
        }
      }
    }
  }
  CHECK(max_diff(a, o) <= 1e-13);
}

TEST_CASE("nonpositive weight rejected") {
  const Mesh m = build_unit_square_mesh(1);
  const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
  CHECK_THROWS_AS(assemble_stiffness_weighted(s, m, [](int, const Bary&, const Point&) { return -1.0; }), std::domain_error);
  CHECK_THROWS_AS(assemble_stiffness_weighted(s, m, [](int, const Bary&, const Point&) { return NAN; }), std::domain_error);
}

TEST_CASE("convection matches the exact oracle and is skew") {
  for (int n : {1, 2}) {
    const Mesh m = jittered(n, 9u);
    const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
    const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
    const Vector wind = random_vector(v.n_dofs, 21u);
    const SparseMatrix ns = assemble_convection_skew(s, m, wind, v);
    const SparseMatrix nv = assemble_convection_skew(v, m, wind, v);
    CHECK(max_diff(ns, oracle::convection(m, true, wind)) <= 1e-13);
    CHECK(max_diff(nv, oracle::convection(m, false, wind)) <= 1e-13);
    CHECK(max_abs(SparseMatrix(nv + SparseMatrix(nv.transpose()))) <= 1e-12 * max_abs(nv));
  }

  const Mesh m = build_unit_square_mesh(2);
  const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
  const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
  const Vector constant = interpolate([](const Point&, double) { return Vec2(1.0, 0.0); }, v, m, 0.0);
  CHECK(max_diff(assemble_convection_skew(s, m, constant, v), oracle::convection(m, true, constant)) <= 1e-13);
  CHECK_THROWS_AS(assemble_convection_skew(s, m, Vector::Zero(3), v), std::invalid_argument);
}

TEST_CASE("divergence coupling") {
  const Mesh m = jittered(2, 13u);
  const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
  const DofMap p = build_dof_map(m, SpaceKind::P1PressureZeroMean);
  const SparseMatrix d = assemble_div_coupling(v, p, m);
  CHECK(max_diff(d, oracle::divergence(m)) <= 1e-13);

  // Constant velocity: every row of D u vanishes.
  const Vector u0 = interpolate([](const Point&, double) { return Vec2(0.3, -0.7); }, v, m, 0.0);
  CHECK((d * u0).cwiseAbs().maxCoeff() <= 1e-13);

  // q = 1 against a zero-trace field: the divergence theorem gives 0.
  Vector u = random_vector(v.n_dofs, 17u);
  for (int dof : locate_boundary_dofs(m, SpaceKind::P1BubbleVector)) u[dof] = 0.0;
  CHECK(std::abs((d * u).sum()) <= 1e-13);
}

TEST_CASE("swim and buoyancy") {
  const Mesh m = jittered(2, 19u);
  const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
  const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
  ModelParams params;
  params.swim_speed = 0.7;
  params.alpha = 0.4;
  params.gravity = 2.0;
  params.gamma = 0.5;
  const SwimOperator sw = assemble_swim(s, m, params);
  const Eigen::MatrixXd so = oracle::swim(m);
  CHECK(max_diff(sw.matrix, so * 0.7) <= 1e-13);
  CHECK((sw.constant - 0.7 * 0.4 * so * Vector::Ones(s.n_dofs)).cwiseAbs().maxCoeff() <= 1e-13);

  const BuoyancyOperator b = assemble_buoyancy(v, s, m, params);
  const Eigen::MatrixXd g = oracle::buoyancy_g(m);
  CHECK(max_diff(b.coupling, -2.0 * 0.5 * g) <= 1e-13);
  CHECK((b.constant + 2.0 * g * Vector::Ones(s.n_dofs)).cwiseAbs().maxCoeff() <= 1e-13);

  params.swim_speed = 0.0;
  params.gravity = 0.0;
  CHECK(max_abs(assemble_swim(s, m, params).matrix) == 0.0);
  CHECK(max_abs(assemble_buoyancy(v, s, m, params).coupling) == 0.0);
}

TEST_CASE("loads") {
  const Mesh m = jittered(2, 23u);
  const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
  const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
  // Quadratic data times a cubic bubble is integrated exactly.
  const VectorFunction quad = [](const Point& x, double) { return Vec2(x.x() * x.y(), 1.0 - x.y() * x.y()); };
  const Vector l = assemble_load(quad, v, m, 0.0);
  const Vector o = oracle::vector_load(m, [&](const Vec2& x) { return quad(x, 0.0); }, 4);
  CHECK((l - o).cwiseAbs().maxCoeff() <= 1e-14);

  const ScalarFunction one = [](const Point&, double) { return 1.0; };
  CHECK((assemble_load(one, s, m, 0.0) - integral_weights(s, m)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(std::abs(integral_weights(s, m).sum() - 1.0) <= 1e-14);
}

TEST_CASE("manufactured load is consistent") {
  ModelParams params;
  const ExactSolution exact(params);
  double previous = 0.0;
  for (int n : {2, 4, 8}) {
    const Mesh m = build_unit_square_mesh(n);
    const DofMap v = build_dof_map(m, SpaceKind::P1BubbleVector);
    const Vector l = assemble_load(exact.forcing_function(), v, m, 1.0);
    const Vector o = oracle::vector_load(m, [&](const Vec2& x) { return exact.momentum_forcing(x, 1.0); }, 16);
    const double d = (l - o).cwiseAbs().maxCoeff();
    MESSAGE("n=" << n << " manufactured load vs refined oracle: " << d);
    if (n > 2) CHECK(d < previous / 32.0);
    previous = d;
  }
}

TEST_CASE("viscosity weights") {
  const Mesh m = build_unit_square_mesh(2);
  const DofMap s = build_dof_map(m, SpaceKind::P1Scalar);
  ModelParams params;
  params.viscosity = ViscosityLaw::exponential();
  params.alpha = 0.5;
  const Vector c = Vector::Constant(s.n_dofs, -0.5);
  const auto [lo, hi] = viscosity_range(params, c, s);
  CHECK(lo == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-15));
  const Vector c2 = random_vector(s.n_dofs, 3u, 0.0, 1.0);
  const auto [lo2, hi2] = viscosity_range(params, c2, s);
  CHECK(lo2 >= std::exp(0.5 + c2.minCoeff()) - 1e-14);
  CHECK(hi2 <= std::exp(0.5 + c2.maxCoeff()) + 1e-14);
}

TEST_CASE("static operator set") {
  const Mesh m = build_unit_square_mesh(2);
  const SpaceSet sp = build_spaces(m, true);
  ModelParams params;
  params.theta = 0.3;
  const DiscreteOperatorSet ops = assemble_static_operators(sp.velocity, sp.pressure, sp.concentration, m, params);
  CHECK(max_diff(ops.concentration_stiffness, 0.3 * oracle::stiffness(m, true, [](int, const Bary&) { return 1.0; }, 2)) <=
        1e-13);
  CHECK(max_diff(ops.velocity_mass, oracle::mass(m, false)) <= 1e-14);
  CHECK(std::abs(ops.pressure_weights.sum() - 1.0) <= 1e-14);
  CHECK(std::abs(ops.concentration_weights.sum() - 1.0) <= 1e-14);
}
