#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bioconv/assembly.hpp"
#include "bioconv/manufactured.hpp"

namespace bioconv {

enum class Scheme { Decoupled, Coupled };
enum class Mode { Physical, Manufactured };

std::string to_string(Scheme scheme);
std::string to_string(Mode mode);
Scheme parse_scheme(const std::string& text);
Mode parse_mode(const std::string& text);

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two consecutive time levels of velocity and concentration plus the latest
/// pressure.
struct FieldState {
  Vector u_prev, u_curr;
  Vector c_prev, c_curr;
  Vector p_curr;
  int step = 0;
  double t = 0.0;
};

/// Data that selects between the physical problem and a manufactured one.
///
/// Physical: u = 0 on the boundary, zero-mean concentration, no sources.
/// Manufactured: Dirichlet data for u and c from the given functions, the
/// concentration mean is left free.
struct ProblemData {
  Mode mode = Mode::Physical;
  VectorFunction forcing;                 // empty means f = 0
  ScalarFunction source;                  // empty means no concentration source
  VectorFunction boundary_velocity;       // empty means u = 0 on the boundary
  ScalarFunction boundary_concentration;  // manufactured mode only
  VectorFunction initial_velocity;
  ScalarFunction initial_concentration;
};

ProblemData manufactured_problem(const ModelParams& params);

/// f = 0 with a divergence-free initial velocity vanishing on the boundary
/// and concentration cos(pi x) cos(pi y).
ProblemData physical_problem();

struct StepDiagnostics {
  int step = 0;
  double t = 0.0;
  double velocity_l2 = 0.0;
  double velocity_h1 = 0.0;
  double concentration_l2 = 0.0;
  double concentration_h1 = 0.0;
  double pressure_l2 = 0.0;
  double solver_residual = 0.0;  // max over the linear solves of this step
  // |(D_tau v, v)_M - telescope sum| / scale; zero on the first step.
  double velocity_telescope_residual = 0.0;
  double concentration_telescope_residual = 0.0;
  // v^T N v / (|N|_max |v|^2) for the new iterate.
  double velocity_convection_energy = 0.0;
  double concentration_convection_energy = 0.0;
  double concentration_mean = 0.0;
  double pressure_mean = 0.0;
  double viscosity_min = 0.0;
  double viscosity_max = 0.0;
  bool viscosity_out_of_bounds = false;
};

/// Relative residual of the BDF2 telescope identity in the M inner product:
/// (D_tau v^{n+1}, v^{n+1}) = 1/(4 tau) (|v^{n+1}|^2 - |v^n|^2 + |^v^{n+1}|^2
/// - |^v^n|^2 + |v^{n+1} - 2 v^n + v^{n-1}|^2).
double telescope_residual(const SparseMatrix& mass, const Vector& next, const Vector& curr, const Vector& prev,
                          double tau);

/// BDF2 stencil weights (on v^{n+1}, v^n, v^{n-1}) before division by tau.
inline constexpr std::array<double, 3> kBdf2Stencil{1.5, -2.0, 0.5};

/// Second-order extrapolation 2 v^n - v^{n-1}.
inline Vector extrapolate(const Vector& curr, const Vector& prev) { return 2.0 * curr - prev; }

/// One run's fixed data: mesh, spaces, static operators and problem data.
/// Each step solves one (coupled) or two (decoupled) linear systems.
class TimeStepper {
 public:
  TimeStepper(const Mesh& mesh, ModelParams params, ProblemData data);

  [[nodiscard]] FieldState initial_state() const;

  FieldState first_step_decoupled(const FieldState& state0);
  FieldState bdf2_step_decoupled(const FieldState& state);
  FieldState first_step_coupled(const FieldState& state0);
  FieldState bdf2_step_coupled(const FieldState& state);

  /// Dispatches on the step index: backward Euler from level 0, BDF2 after.
  FieldState step(const FieldState& state, Scheme scheme);

  [[nodiscard]] const StepDiagnostics& last_diagnostics() const { return last_; }
  [[nodiscard]] const SpaceSet& spaces() const { return spaces_; }
  [[nodiscard]] const DiscreteOperatorSet& operators() const { return ops_; }
  [[nodiscard]] const ModelParams& params() const { return params_; }
  [[nodiscard]] const ProblemData& data() const { return data_; }
  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] int solves() const { return solves_; }

  /// Dirichlet velocity values at time t for the boundary DOFs.
  [[nodiscard]] std::map<int, double> velocity_dirichlet(double t) const;
  [[nodiscard]] std::map<int, double> concentration_dirichlet(double t) const;

 private:
  struct StepInputs {
    double time_coeff = 0.0;
    Vector u_history;  // mass-weighted
    Vector c_history;
    Vector viscosity_c;
    Vector wind;
    std::optional<Vector> explicit_buoyancy_c;
    std::optional<Vector> explicit_swim_c;
    double t_new = 0.0;
  };

  StepInputs first_step_inputs(const FieldState& s) const;
  StepInputs bdf2_inputs(const FieldState& s) const;
  FieldState advance(const FieldState& s, const StepInputs& in, bool monolithic);
  void diagnose(const FieldState& before, const FieldState& after, const SparseMatrix& u_conv,
                const SparseMatrix& c_conv, double residual);

  const Mesh& mesh_;
  ModelParams params_;
  ProblemData data_;
  SpaceSet spaces_;
  DiscreteOperatorSet ops_;
  std::vector<int> velocity_boundary_;
  std::vector<int> concentration_boundary_;
  StepDiagnostics last_;
  int solves_ = 0;
};

struct SimulationResult {
  FieldState final_state;
  std::vector<StepDiagnostics> diagnostics;
  int solves = 0;
};

/// Called after every step with the new state and its diagnostics.
using StepObserver = std::function<void(const FieldState&, const StepDiagnostics&)>;

/// First step followed by N-1 BDF2 steps, N = T / tau. Throws
/// SimulationError on non-finite values (with the step index) and
/// SolverError on solver failure.
SimulationResult run_simulation(const ModelParams& params, Scheme scheme, const Mesh& mesh, const ProblemData& data,
                                const StepObserver& observer = {});

}  // namespace bioconv
