#include "bioconv/manufactured.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bioconv {

namespace {

constexpr double kPi = std::numbers::pi;

// Velocity profile s(2s-1)(s-1) and its derivatives.
double profile(double s) { return s * (2.0 * s - 1.0) * (s - 1.0); }
double profile_d1(double s) { return 6.0 * s * s - 6.0 * s + 1.0; }
double profile_d2(double s) { return 12.0 * s - 6.0; }

}  // namespace

Vec2 ExactSolution::velocity(const Point& x, double t) {
  const double e = std::exp(-t);
  return {e * profile(x.y()), -e * profile(x.x())};
}

Mat2 ExactSolution::velocity_gradient(const Point& x, double t) {
  const double e = std::exp(-t);
  Mat2 g;
  g << 0.0, e * profile_d1(x.y()), -e * profile_d1(x.x()), 0.0;
  return g;
}

double ExactSolution::pressure(const Point& x, double t) {
  return std::exp(-t) * (2.0 * x.x() - 1.0) * (2.0 * x.y() - 1.0);
}

double ExactSolution::concentration(const Point& x, double t) {
  return std::exp(-t) * std::sin(kPi * x.x()) * std::sin(kPi * x.y());
}

Vec2 ExactSolution::concentration_gradient(const Point& x, double t) {
  const double e = std::exp(-t);
  const double sx = std::sin(kPi * x.x()), cx = std::cos(kPi * x.x());
  const double sy = std::sin(kPi * x.y()), cy = std::cos(kPi * x.y());
  return {e * kPi * cx * sy, e * kPi * sx * cy};
}

Vec2 ExactSolution::momentum_forcing(const Point& x, double t) const {
  const double e = std::exp(-t);
  const Vec2 u = velocity(x, t);
  const double c = concentration(x, t);
  const Vec2 grad_c = concentration_gradient(x, t);
  const double nu = params_.viscosity.value(c + params_.alpha);
  const Vec2 grad_nu = params_.viscosity.derivative(c + params_.alpha) * grad_c;

  const double d1y = e * profile_d1(x.y());   // d u1 / dy
  const double d1x = -e * profile_d1(x.x());  // d u2 / dx
  const double d2y = e * profile_d2(x.y());
  const double d2x = -e * profile_d2(x.x());

  Vec2 viscous;
  if (params_.viscous_form == ViscousForm::Gradient) {
    // -nu lap u - (grad nu . grad) u
    viscous = {-nu * d2y - grad_nu.y() * d1y, -nu * d2x - grad_nu.x() * d1x};
  } else {
    // -div(nu D(u)); D has zero diagonal and off-diagonal (d1y + d1x)/2.
    const double d12 = 0.5 * (d1y + d1x);
    viscous = {-(grad_nu.y() * d12 + 0.5 * nu * d2y), -(grad_nu.x() * d12 + 0.5 * nu * d2x)};
  }
  const Vec2 convection(u.y() * d1y, u.x() * d1x);
  const Vec2 grad_p(2.0 * e * (2.0 * x.y() - 1.0), 2.0 * e * (2.0 * x.x() - 1.0));
  const Vec2 buoyancy(0.0, params_.gravity * (1.0 + params_.gamma * c));
  return -u + viscous + convection + grad_p + buoyancy;
}

double ExactSolution::concentration_source(const Point& x, double t) const {
  const double c = concentration(x, t);
  const Vec2 grad_c = concentration_gradient(x, t);
  const Vec2 u = velocity(x, t);
  return -c + params_.theta * 2.0 * kPi * kPi * c + u.dot(grad_c) + params_.swim_speed * grad_c.y();
}

VectorFunction ExactSolution::velocity_function() const { return [](const Point& x, double t) { return velocity(x, t); }; }

ScalarFunction ExactSolution::pressure_function() const {
  return [](const Point& x, double t) { return pressure(x, t); };
}

ScalarFunction ExactSolution::concentration_function() const {
  return [](const Point& x, double t) { return concentration(x, t); };
}

VectorFunction ExactSolution::forcing_function() const {
  return [self = *this](const Point& x, double t) { return self.momentum_forcing(x, t); };
}

ScalarFunction ExactSolution::source_function() const {
  return [self = *this](const Point& x, double t) { return self.concentration_source(x, t); };
}

SpaceSet build_spaces(const Mesh& mesh, bool zero_mean_concentration) {
  return {build_dof_map(mesh, SpaceKind::P1BubbleVector), build_dof_map(mesh, SpaceKind::P1PressureZeroMean),
          build_dof_map(mesh, zero_mean_concentration ? SpaceKind::P1ScalarZeroMean : SpaceKind::P1Scalar)};
}

namespace {

double mean_value(const Vector& coeffs, const DofMap& space, const Mesh& mesh, const ScalarFunction* exact, double t) {
  const QuadratureRule& rule = quadrature_rule(kDefaultQuadratureDegree);
  double total = 0.0;
  double area = 0.0;
  for (int e = 0; e < space.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geom.area;
      const double v = exact ? (*exact)(geom.map(rule.points[q]), t)
                             : evaluate_scalar(coeffs, space, e, local_shapes(geom, rule.points[q])).value;
      total += w * v;
      area += w;
    }
  }
  return total / area;
}

}  // namespace

ErrorRecord error_norms(const DiscreteFields& fields, const SpaceSet& spaces, const Mesh& mesh, double t) {
  const QuadratureRule& rule = quadrature_rule(kDefaultQuadratureDegree);
  const ScalarFunction p_exact = [](const Point& x, double s) { return ExactSolution::pressure(x, s); };
  const double p_mean_h = mean_value(fields.pressure, spaces.pressure, mesh, nullptr, t);
  const double p_mean = mean_value(fields.pressure, spaces.pressure, mesh, &p_exact, t);

  double eu0 = 0, eu1 = 0, ec0 = 0, ec1 = 0, ep0 = 0;
  double nu0 = 0, nc0 = 0, np0 = 0;
  double hu0 = 0, hu1 = 0, hc0 = 0, hc1 = 0, hp0 = 0;
  for (int e = 0; e < spaces.velocity.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Bary& bary = rule.points[q];
      const double w = rule.weights[q] * geom.area;
      const Point x = geom.map(bary);
      const LocalShapes sh = local_shapes(geom, bary);
      const VectorSample uh = evaluate_vector(fields.velocity, spaces.velocity, e, sh);
      const ScalarSample ch = evaluate_scalar(fields.concentration, spaces.concentration, e, sh);
      const ScalarSample ph = evaluate_scalar(fields.pressure, spaces.pressure, e, sh);

      const Vec2 u = ExactSolution::velocity(x, t);
      const Mat2 gu = ExactSolution::velocity_gradient(x, t);
      const double c = ExactSolution::concentration(x, t);
      const Vec2 gc = ExactSolution::concentration_gradient(x, t);
      const double p = ExactSolution::pressure(x, t) - p_mean;
      const double p_h = ph.value - p_mean_h;

      eu0 += w * (u - uh.value).squaredNorm();
      eu1 += w * (gu - uh.grad).squaredNorm();
      ec0 += w * (c - ch.value) * (c - ch.value);
      ec1 += w * (gc - ch.grad).squaredNorm();
      ep0 += w * (p - p_h) * (p - p_h);
      nu0 += w * u.squaredNorm();
      nc0 += w * c * c;
      np0 += w * p * p;
      hu0 += w * uh.value.squaredNorm();
      hu1 += w * uh.grad.squaredNorm();
      hc0 += w * ch.value * ch.value;
      hc1 += w * ch.grad.squaredNorm();
      hp0 += w * p_h * p_h;
    }
  }
  ErrorRecord r;
  r.n = mesh.n;
  r.h = mesh.spacing();
  r.velocity_l2 = std::sqrt(eu0);
  r.velocity_h1 = std::sqrt(eu0 + eu1);
  r.concentration_l2 = std::sqrt(ec0);
  r.concentration_h1 = std::sqrt(ec0 + ec1);
  r.pressure_l2 = std::sqrt(ep0);
  r.velocity_l2_rel = nu0 > 0 ? r.velocity_l2 / std::sqrt(nu0) : 0.0;
  r.concentration_l2_rel = nc0 > 0 ? r.concentration_l2 / std::sqrt(nc0) : 0.0;
  r.pressure_l2_rel = np0 > 0 ? r.pressure_l2 / std::sqrt(np0) : 0.0;
  r.velocity_norm_l2 = std::sqrt(hu0);
  r.velocity_norm_h1 = std::sqrt(hu0 + hu1);
  r.concentration_norm_l2 = std::sqrt(hc0);
  r.concentration_norm_h1 = std::sqrt(hc0 + hc1);
  r.pressure_norm_l2 = std::sqrt(hp0);
  return r;
}

FieldNorms field_norms(const DiscreteFields& fields, const SpaceSet& spaces, const Mesh& mesh) {
  const QuadratureRule& rule = quadrature_rule(kDefaultQuadratureDegree);
  const double p_mean = mean_value(fields.pressure, spaces.pressure, mesh, nullptr, 0.0);
  double u0 = 0, u1 = 0, c0 = 0, c1 = 0, p0 = 0;
  for (int e = 0; e < spaces.velocity.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geom.area;
      const LocalShapes sh = local_shapes(geom, rule.points[q]);
      const VectorSample uh = evaluate_vector(fields.velocity, spaces.velocity, e, sh);
      const ScalarSample ch = evaluate_scalar(fields.concentration, spaces.concentration, e, sh);
      const double ph = evaluate_scalar(fields.pressure, spaces.pressure, e, sh).value - p_mean;
      u0 += w * uh.value.squaredNorm();
      u1 += w * uh.grad.squaredNorm();
      c0 += w * ch.value * ch.value;
      c1 += w * ch.grad.squaredNorm();
      p0 += w * ph * ph;
    }
  }
  return {std::sqrt(u0), std::sqrt(u0 + u1), std::sqrt(c0), std::sqrt(c0 + c1), std::sqrt(p0)};
}

double scalar_l2_error(const Vector& coeffs, const DofMap& space, const Mesh& mesh, const ScalarFunction& exact,
                       double t) {
  const QuadratureRule& rule = quadrature_rule(kDefaultQuadratureDegree);
  double sum = 0.0;
  for (int e = 0; e < space.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geom.area;
      const double vh = evaluate_scalar(coeffs, space, e, local_shapes(geom, rule.points[q])).value;
      const double d = exact(geom.map(rule.points[q]), t) - vh;
      sum += w * d * d;
    }
  }
  return std::sqrt(sum);
}

double convergence_rate(double coarse_error, double fine_error) {
  if (!(coarse_error > 0.0) || !(fine_error > 0.0)) {
    throw std::invalid_argument("convergence_rate: errors must be positive");
  }
  return std::log2(coarse_error / fine_error);
}

std::vector<std::optional<double>> compute_rates(const std::vector<double>& errors) {
  std::vector<std::optional<double>> rates(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) rates[i] = convergence_rate(errors[i - 1], errors[i]);
  return rates;
}

}  // namespace bioconv
