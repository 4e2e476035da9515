#pragma once

#include <optional>
#include <vector>

#include "bioconv/fem.hpp"
#include "bioconv/params.hpp"

namespace bioconv {

/// Closed-form test fields on the unit square:
///   u = e^{-t} ( y(2y-1)(y-1), -x(2x-1)(x-1) )
///   p = e^{-t} (2x-1)(2y-1)
///   c = e^{-t} sin(pi x) sin(pi y)
/// plus the matching momentum forcing f and concentration source g_c for the
/// shifted system with viscosity nu(c + alpha).
class ExactSolution {
 public:
  explicit ExactSolution(ModelParams params) : params_(std::move(params)) {}

  static Vec2 velocity(const Point& x, double t);
  static Mat2 velocity_gradient(const Point& x, double t);  // (k,d) = d u_k / d x_d
  static double pressure(const Point& x, double t);
  static double concentration(const Point& x, double t);
  static Vec2 concentration_gradient(const Point& x, double t);

  /// f = u_t - div(nu(c+alpha) grad u) + u.grad u + grad p + g(1 + gamma c) i2,
  /// with D(u) in place of grad u when the symmetric viscous form is selected.
  [[nodiscard]] Vec2 momentum_forcing(const Point& x, double t) const;

  /// g_c = c_t - theta lap c + u.grad c + U dc/dx2.
  [[nodiscard]] double concentration_source(const Point& x, double t) const;

  [[nodiscard]] VectorFunction velocity_function() const;
  [[nodiscard]] ScalarFunction pressure_function() const;
  [[nodiscard]] ScalarFunction concentration_function() const;
  [[nodiscard]] VectorFunction forcing_function() const;
  [[nodiscard]] ScalarFunction source_function() const;

  [[nodiscard]] const ModelParams& params() const { return params_; }

 private:
  ModelParams params_;
};

/// Discrete fields at one time level, as produced by the time steppers.
struct DiscreteFields {
  const Vector& velocity;
  const Vector& pressure;
  const Vector& concentration;
};

struct SpaceSet {
  DofMap velocity;
  DofMap pressure;
  DofMap concentration;
};

SpaceSet build_spaces(const Mesh& mesh, bool zero_mean_concentration);

/// Final-time errors and discrete norms for one mesh. H1 entries are full
/// norms, sqrt(L2^2 + |.|_{H1}^2).
struct ErrorRecord {
  int n = 0;
  double h = 0.0;    // grid spacing 1/n
  double tau = 0.0;
  double velocity_l2 = 0.0;
  double velocity_h1 = 0.0;
  double concentration_l2 = 0.0;
  double concentration_h1 = 0.0;
  double pressure_l2 = 0.0;
  double velocity_l2_rel = 0.0;
  double concentration_l2_rel = 0.0;
  double pressure_l2_rel = 0.0;
  // Norms of the discrete solution.
  double velocity_norm_l2 = 0.0;
  double velocity_norm_h1 = 0.0;
  double concentration_norm_l2 = 0.0;
  double concentration_norm_h1 = 0.0;
  double pressure_norm_l2 = 0.0;
  // Time-accumulated (tau sum_n ||.||^2)^{1/2}; filled by the harness.
  double velocity_l2l2 = 0.0;
  double concentration_l2l2 = 0.0;
  double pressure_l2l2 = 0.0;
};

/// Errors of the discrete fields against the exact solution at time t.
/// Pressures are compared after subtracting their means.
ErrorRecord error_norms(const DiscreteFields& fields, const SpaceSet& spaces, const Mesh& mesh, double t);

/// L2 and full H1 norms of discrete fields (no exact solution involved).
struct FieldNorms {
  double velocity_l2 = 0.0;
  double velocity_h1 = 0.0;
  double concentration_l2 = 0.0;
  double concentration_h1 = 0.0;
  double pressure_l2 = 0.0;
};
FieldNorms field_norms(const DiscreteFields& fields, const SpaceSet& spaces, const Mesh& mesh);

/// L2 error of a scalar P1 field against a function, by degree-5 quadrature.
double scalar_l2_error(const Vector& coeffs, const DofMap& space, const Mesh& mesh, const ScalarFunction& exact,
                       double t);

/// Observed order log2(e_coarse / e_fine). Throws on nonpositive inputs.
double convergence_rate(double coarse_error, double fine_error);

/// One optional rate per record; the first entry is always empty.
std::vector<std::optional<double>> compute_rates(const std::vector<double>& errors);

}  // namespace bioconv
