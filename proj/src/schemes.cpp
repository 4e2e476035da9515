#include "bioconv/schemes.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bioconv {

std::string to_string(Scheme scheme) { return scheme == Scheme::Decoupled ? "decoupled" : "coupled"; }

std::string to_string(Mode mode) { return mode == Mode::Physical ? "physical" : "manufactured"; }

Scheme parse_scheme(const std::string& text) {
  if (text == "decoupled") return Scheme::Decoupled;
  if (text == "coupled") return Scheme::Coupled;
  throw std::invalid_argument("unknown scheme '" + text + "' (expected decoupled|coupled)");
}

Mode parse_mode(const std::string& text) {
  if (text == "physical") return Mode::Physical;
  if (text == "manufactured") return Mode::Manufactured;
  throw std::invalid_argument("unknown mode '" + text + "' (expected physical|manufactured)");
}

ProblemData manufactured_problem(const ModelParams& params) {
  const ExactSolution exact(params);
  ProblemData data;
  data.mode = Mode::Manufactured;
  data.forcing = exact.forcing_function();
  data.source = exact.source_function();
  data.boundary_velocity = exact.velocity_function();
  data.boundary_concentration = exact.concentration_function();
  data.initial_velocity = exact.velocity_function();
  data.initial_concentration = exact.concentration_function();
  return data;
}

ProblemData physical_problem() {
  ProblemData data;
  data.mode = Mode::Physical;
  // 16 curl(x^2 (1-x)^2 y^2 (1-y)^2)
  data.initial_velocity = [](const Point& p, double) {
    const double x = p.x(), y = p.y();
    const double fx = x * x * (1 - x) * (1 - x), fy = y * y * (1 - y) * (1 - y);
    const double dfx = 2 * x * (1 - x) * (1 - 2 * x), dfy = 2 * y * (1 - y) * (1 - 2 * y);
    return Vec2(16.0 * fx * dfy, -16.0 * dfx * fy);
  };
  data.initial_concentration = [](const Point& p, double) {
    return std::cos(std::numbers::pi * p.x()) * std::cos(std::numbers::pi * p.y());
  };
  return data;
}

double telescope_residual(const SparseMatrix& mass, const Vector& next, const Vector& curr, const Vector& prev,
                          double tau) {
  const auto sq = [&mass](const Vector& v) { return v.dot(mass * v); };
  const Vector stencil = (3.0 * next - 4.0 * curr + prev) / (2.0 * tau);
  const double lhs = next.dot(mass * stencil);
  const Vector hat_next = extrapolate(next, curr);
  const Vector hat_curr = extrapolate(curr, prev);
  const Vector second = next - 2.0 * curr + prev;
  const double a = sq(next), b = sq(curr), c = sq(hat_next), d = sq(hat_curr), e = sq(second);
  const double rhs = (a - b + c - d + e) / (4.0 * tau);
  const double scale = (a + b + c + d + e) / (4.0 * tau);
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

namespace {

// Both components of each element bubble; they couple only within their
// element, so the solver condenses them out.
std::vector<std::vector<int>> bubble_blocks(const DofMap& velocity) {
  std::vector<std::vector<int>> blocks;
  blocks.reserve(static_cast<std::size_t>(velocity.num_cells));
  for (int e = 0; e < velocity.num_cells; ++e) {
    const int slot = velocity.num_nodes + e;
    blocks.push_back({2 * slot, 2 * slot + 1});
  }
  return blocks;
}

ModelParams validated(ModelParams params) {
  params.validate();
  return params;
}

}  // namespace

TimeStepper::TimeStepper(const Mesh& mesh, ModelParams params, ProblemData data)
    : mesh_(mesh),
      params_(validated(std::move(params))),
      data_(std::move(data)),
      spaces_(build_spaces(mesh, data_.mode == Mode::Physical)),
      ops_(assemble_static_operators(spaces_.velocity, spaces_.pressure, spaces_.concentration, mesh, params_)),
      velocity_boundary_(locate_boundary_dofs(mesh, SpaceKind::P1BubbleVector)),
      concentration_boundary_(locate_boundary_dofs(mesh, SpaceKind::P1Scalar)) {
  if (data_.mode == Mode::Manufactured && !data_.boundary_concentration) {
    throw std::invalid_argument("manufactured mode needs boundary concentration data");
  }
}

FieldState TimeStepper::initial_state() const {
  FieldState s;
  s.u_curr = data_.initial_velocity ? interpolate(data_.initial_velocity, spaces_.velocity, mesh_, 0.0)
                                    : Vector::Zero(spaces_.velocity.n_dofs);
  s.c_curr = data_.initial_concentration ? interpolate(data_.initial_concentration, spaces_.concentration, mesh_, 0.0)
                                         : Vector::Zero(spaces_.concentration.n_dofs);
  if (data_.mode == Mode::Physical) {
    // Project onto the zero-mean space.
    const Vector& w = ops_.concentration_weights;
    s.c_curr.array() -= w.dot(s.c_curr) / w.sum();
  }
  s.u_prev = s.u_curr;
  s.c_prev = s.c_curr;
  s.p_curr = Vector::Zero(spaces_.pressure.n_dofs);
  return s;
}

std::map<int, double> TimeStepper::velocity_dirichlet(double t) const {
  std::map<int, double> values;
  for (int dof : velocity_boundary_) {
    double v = 0.0;
    if (data_.boundary_velocity) {
      const Vec2 u = data_.boundary_velocity(mesh_.nodes[dof / 2], t);
      v = u[dof % 2];
    }
    values.emplace(dof, v);
  }
  return values;
}

std::map<int, double> TimeStepper::concentration_dirichlet(double t) const {
  std::map<int, double> values;
  if (data_.mode != Mode::Manufactured) return values;
  for (int dof : concentration_boundary_) values.emplace(dof, data_.boundary_concentration(mesh_.nodes[dof], t));
  return values;
}

TimeStepper::StepInputs TimeStepper::first_step_inputs(const FieldState& s) const {
  const double tau = params_.tau;
  StepInputs in;
  in.time_coeff = 1.0 / tau;
  in.u_history = ops_.velocity_mass * s.u_curr / tau;
  in.c_history = ops_.concentration_mass * s.c_curr / tau;
  in.viscosity_c = s.c_curr;
  in.wind = s.u_curr;
  in.t_new = (s.step + 1) * tau;
  return in;
}

TimeStepper::StepInputs TimeStepper::bdf2_inputs(const FieldState& s) const {
  const double tau = params_.tau;
  StepInputs in;
  in.time_coeff = kBdf2Stencil[0] / tau;
  in.u_history = ops_.velocity_mass * (-kBdf2Stencil[1] * s.u_curr - kBdf2Stencil[2] * s.u_prev) / tau;
  in.c_history = ops_.concentration_mass * (-kBdf2Stencil[1] * s.c_curr - kBdf2Stencil[2] * s.c_prev) / tau;
  in.viscosity_c = extrapolate(s.c_curr, s.c_prev);
  in.wind = extrapolate(s.u_curr, s.u_prev);
  in.t_new = (s.step + 1) * tau;
  return in;
}

FieldState TimeStepper::first_step_decoupled(const FieldState& state0) {
  StepInputs in = first_step_inputs(state0);
  in.explicit_buoyancy_c = state0.c_curr;
  in.explicit_swim_c = state0.c_curr;
  return advance(state0, in, false);
}

FieldState TimeStepper::bdf2_step_decoupled(const FieldState& state) {
  StepInputs in = bdf2_inputs(state);
  in.explicit_buoyancy_c = in.viscosity_c;
  in.explicit_swim_c = in.viscosity_c;
  return advance(state, in, false);
}

FieldState TimeStepper::first_step_coupled(const FieldState& state0) {
  StepInputs in = first_step_inputs(state0);
  in.explicit_swim_c = state0.c_curr;
  return advance(state0, in, true);
}

FieldState TimeStepper::bdf2_step_coupled(const FieldState& state) {
  return advance(state, bdf2_inputs(state), true);
}

FieldState TimeStepper::step(const FieldState& state, Scheme scheme) {
  if (scheme == Scheme::Decoupled) {
    return state.step == 0 ? first_step_decoupled(state) : bdf2_step_decoupled(state);
  }
  return state.step == 0 ? first_step_coupled(state) : bdf2_step_coupled(state);
}

FieldState TimeStepper::advance(const FieldState& s, const StepInputs& in, bool monolithic) {
  const int nu = spaces_.velocity.n_dofs;
  const int np = spaces_.pressure.n_dofs;
  const int nc = spaces_.concentration.n_dofs;

  const auto [nu_min, nu_max] = viscosity_range(params_, in.viscosity_c, spaces_.concentration);
  const SparseMatrix viscous =
      assemble_stiffness_weighted(spaces_.velocity, mesh_, viscosity_weight(params_, in.viscosity_c, spaces_.concentration),
                                  params_.viscous_form);
  const SparseMatrix u_conv = assemble_convection_skew(spaces_.velocity, mesh_, in.wind, spaces_.velocity);
  const SparseMatrix c_conv = assemble_convection_skew(spaces_.concentration, mesh_, in.wind, spaces_.velocity);

  SparseMatrix momentum = in.time_coeff * ops_.velocity_mass + viscous + u_conv;
  SparseMatrix transport = in.time_coeff * ops_.concentration_mass + ops_.concentration_stiffness + c_conv;
  if (!in.explicit_swim_c) transport -= ops_.swim.matrix;

  Vector u_rhs = in.u_history + ops_.buoyancy.constant;
  if (data_.forcing) u_rhs += assemble_load(data_.forcing, spaces_.velocity, mesh_, in.t_new);
  if (in.explicit_buoyancy_c) u_rhs += ops_.buoyancy.coupling * *in.explicit_buoyancy_c;

  Vector c_rhs = in.c_history + ops_.swim.constant;
  if (in.explicit_swim_c) c_rhs += ops_.swim.matrix * *in.explicit_swim_c;
  if (data_.source) c_rhs += assemble_load(data_.source, spaces_.concentration, mesh_, in.t_new);

  const auto u_bc = velocity_dirichlet(in.t_new);
  const auto c_bc = concentration_dirichlet(in.t_new);
  const bool c_mean = data_.mode == Mode::Physical;

  FieldState next;
  next.u_prev = s.u_curr;
  next.c_prev = s.c_curr;
  next.step = s.step + 1;
  next.t = in.t_new;
  double residual = 0.0;

  const auto check_finite = [&](const Vector& x, const char* what) {
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite " << what << " at step " << next.step << " (t=" << next.t << ")";
      throw SimulationError(msg.str());
    }
  };
  const auto solve_step = [&](const ConstrainedSystem& system) {
    try {
      return solve(system);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at step " + std::to_string(next.step));
    }
  };
  check_finite(u_rhs, "momentum right-hand side");
  check_finite(c_rhs, "concentration right-hand side");

  if (!monolithic) {
    ConstrainedSystem flow;
    std::vector<Triplet> entries;
    append_block(entries, momentum, 0, 0);
    append_block(entries, SparseMatrix(ops_.divergence.transpose()), 0, nu, -1.0);
    append_block(entries, ops_.divergence, nu, 0);
    flow.matrix.resize(nu + np, nu + np);
    flow.matrix.setFromTriplets(entries.begin(), entries.end());
    flow.rhs = Vector::Zero(nu + np);
    flow.rhs.head(nu) = u_rhs;
    flow.dirichlet = u_bc;
    MeanConstraint pmean;
    pmean.weights = Vector::Zero(nu + np);
    pmean.weights.tail(np) = ops_.pressure_weights;
    flow.mean_constraints.push_back(std::move(pmean));
    flow.local_blocks = bubble_blocks(spaces_.velocity);
    const SolveResult up = solve_step(flow);
    ++solves_;
    check_finite(up.x, "velocity/pressure");
    next.u_curr = up.x.head(nu);
    next.p_curr = up.x.tail(np);
    residual = up.relative_residual;

    ConstrainedSystem conc;
    conc.matrix = transport;
    conc.rhs = c_rhs;
    conc.dirichlet = c_bc;
    if (c_mean) conc.mean_constraints.push_back({ops_.concentration_weights, 0.0});
    const SolveResult c = solve_step(conc);
    ++solves_;
    check_finite(c.x, "concentration");
    next.c_curr = c.x;
    residual = std::max(residual, c.relative_residual);
  } else {
    const int n = nu + np + nc;
    ConstrainedSystem sys;
    std::vector<Triplet> entries;
    append_block(entries, momentum, 0, 0);
    append_block(entries, SparseMatrix(ops_.divergence.transpose()), 0, nu, -1.0);
    append_block(entries, ops_.divergence, nu, 0);
    if (!in.explicit_buoyancy_c) append_block(entries, ops_.buoyancy.coupling, 0, nu + np, -1.0);
    append_block(entries, transport, nu + np, nu + np);
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(entries.begin(), entries.end());
    sys.rhs = Vector::Zero(n);
    sys.rhs.head(nu) = u_rhs;
    sys.rhs.tail(nc) = c_rhs;
    sys.dirichlet = u_bc;
    for (const auto& [dof, value] : c_bc) sys.dirichlet.emplace(nu + np + dof, value);
    MeanConstraint pmean;
    pmean.weights = Vector::Zero(n);
    pmean.weights.segment(nu, np) = ops_.pressure_weights;
    sys.mean_constraints.push_back(std::move(pmean));
    sys.local_blocks = bubble_blocks(spaces_.velocity);
    if (c_mean) {
      MeanConstraint cm;
      cm.weights = Vector::Zero(n);
      cm.weights.tail(nc) = ops_.concentration_weights;
      sys.mean_constraints.push_back(std::move(cm));
    }
    const SolveResult r = solve_step(sys);
    ++solves_;
    check_finite(r.x, "solution");
    next.u_curr = r.x.head(nu);
    next.p_curr = r.x.segment(nu, np);
    next.c_curr = r.x.tail(nc);
    residual = r.relative_residual;
  }

  diagnose(s, next, u_conv, c_conv, residual);
  last_.viscosity_min = nu_min;
  last_.viscosity_max = nu_max;
  last_.viscosity_out_of_bounds = !params_.viscosity_within_bounds(nu_min) || !params_.viscosity_within_bounds(nu_max);
  return next;
}

void TimeStepper::diagnose(const FieldState& before, const FieldState& after, const SparseMatrix& u_conv,
                           const SparseMatrix& c_conv, double residual) {
  StepDiagnostics d;
  d.step = after.step;
  d.t = after.t;
  const FieldNorms norms = field_norms({after.u_curr, after.p_curr, after.c_curr}, spaces_, mesh_);
  d.velocity_l2 = norms.velocity_l2;
  d.velocity_h1 = norms.velocity_h1;
  d.concentration_l2 = norms.concentration_l2;
  d.concentration_h1 = norms.concentration_h1;
  d.pressure_l2 = norms.pressure_l2;
  d.solver_residual = residual;
  if (before.step >= 1) {
    d.velocity_telescope_residual =
        telescope_residual(ops_.velocity_mass, after.u_curr, before.u_curr, before.u_prev, params_.tau);
    d.concentration_telescope_residual =
        telescope_residual(ops_.concentration_mass, after.c_curr, before.c_curr, before.c_prev, params_.tau);
  }
  const auto energy = [](const SparseMatrix& n, const Vector& v) {
    const double scale = max_abs(n) * v.squaredNorm();
    return scale > 0.0 ? std::abs(v.dot(n * v)) / scale : 0.0;
  };
  d.velocity_convection_energy = energy(u_conv, after.u_curr);
  d.concentration_convection_energy = energy(c_conv, after.c_curr);
  const double area = ops_.concentration_weights.sum();
  d.concentration_mean = ops_.concentration_weights.dot(after.c_curr) / area;
  d.pressure_mean = ops_.pressure_weights.dot(after.p_curr) / area;
  const double all = norms.velocity_l2 + norms.velocity_h1 + norms.concentration_l2 + norms.concentration_h1;
  if (!std::isfinite(all)) {
    throw SimulationError("non-finite norms at step " + std::to_string(after.step));
  }
  last_ = d;
}

SimulationResult run_simulation(const ModelParams& params, Scheme scheme, const Mesh& mesh, const ProblemData& data,
                                const StepObserver& observer) {
  const int steps = params.num_steps();
  TimeStepper stepper(mesh, params, data);
  SimulationResult result;
  FieldState state = stepper.initial_state();
  result.diagnostics.reserve(static_cast<std::size_t>(steps));
  for (int n = 0; n < steps; ++n) {
    state = stepper.step(state, scheme);
    result.diagnostics.push_back(stepper.last_diagnostics());
    if (observer) observer(state, stepper.last_diagnostics());
  }
  result.final_state = std::move(state);
  result.solves = stepper.solves();
  return result;
}

}  // namespace bioconv
