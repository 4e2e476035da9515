#pragma once

#include <string>
#include <vector>

namespace bioconv {

/// Concentration-dependent kinematic viscosity.
struct ViscosityLaw {
  enum class Kind { Constant, Affine, Exponential };

  Kind kind = Kind::Constant;
  double a = 1.0;  // constant value, or intercept of a + b*c
  double b = 0.0;  // slope of a + b*c

  static ViscosityLaw constant(double nu0) { return {Kind::Constant, nu0, 0.0}; }
  static ViscosityLaw affine(double a, double b) { return {Kind::Affine, a, b}; }
  static ViscosityLaw exponential() { return {Kind::Exponential, 0.0, 0.0}; }

  [[nodiscard]] double value(double c) const;
  [[nodiscard]] double derivative(double c) const;

  /// "const:1", "affine:1,0.1", "exp". Throws std::invalid_argument.
  static ViscosityLaw parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;
};

enum class ViscousForm { Gradient, SymmetricGradient };

/// Physical and discretization constants. The concentration unknown is the
/// shifted variable c - alpha, so viscosity is evaluated at c + alpha.
///
/// Also carried for documentation only: the viscosity derivative bound beta,
/// the reference densities and the outward normal, none of which enter any
/// discrete operator.
struct ModelParams {
  double theta = 1.0;  // diffusivity
  double swim_speed = 1.0;  // U
  double gamma = 1.0;  // relative density difference
  double gravity = 1.0;  // g
  double alpha = 0.0;  // mean concentration
  ViscosityLaw viscosity = ViscosityLaw::constant(1.0);
  ViscousForm viscous_form = ViscousForm::Gradient;
  double viscosity_bound = 10.0;  // k in k^-1 <= nu <= k
  double final_time = 1.0;
  double tau = 0.25;

  /// Throws std::invalid_argument on theta <= 0, tau <= 0, T < tau or
  /// non-finite values.
  void validate() const;

  /// Number of steps T/tau; throws unless it is an integer >= 2.
  [[nodiscard]] int num_steps() const;

  [[nodiscard]] bool viscosity_within_bounds(double nu) const {
    return nu >= 1.0 / viscosity_bound && nu <= viscosity_bound;
  }
};

}  // namespace bioconv
