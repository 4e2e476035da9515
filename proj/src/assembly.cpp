#include "bioconv/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bioconv {

namespace {

using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

int shapes_per_component(const DofMap& space) { return space.is_vector() ? 4 : 3; }

void scatter(std::vector<Triplet>& out, std::span<const int> rows, std::span<const int> cols, const LocalMatrix& local) {
  for (int i = 0; i < local.rows(); ++i) {
    for (int j = 0; j < local.cols(); ++j) {
      if (local(i, j) != 0.0) out.emplace_back(rows[i], cols[j], local(i, j));
    }
  }
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& entries) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

void check_scalar(const DofMap& space, const char* who) {
  if (space.is_vector()) throw std::invalid_argument(std::string(who) + ": expected a scalar space");
}

void check_vector(const DofMap& space, const char* who) {
  if (!space.is_vector()) throw std::invalid_argument(std::string(who) + ": expected the vector space");
}

// Symmetric part of the gradient of psi * e_k.
Mat2 sym_grad(const Vec2& grad_psi, int k) {
  Mat2 g = Mat2::Zero();
  g.row(k) = grad_psi.transpose();
  return 0.5 * (g + g.transpose());
}

}  // namespace

SparseMatrix assemble_mass(const DofMap& space, const Mesh& mesh, int degree) {
  const QuadratureRule& rule = quadrature_rule(degree);
  const int ns = shapes_per_component(space);
  const int ncomp = space.is_vector() ? 2 : 1;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(space.num_cells) * space.dofs_per_cell * space.dofs_per_cell);
  LocalMatrix local(space.dofs_per_cell, space.dofs_per_cell);
  for (int e = 0; e < space.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const LocalShapes sh = local_shapes(geom, rule.points[q]);
      const double w = rule.weights[q] * geom.area;
      for (int a = 0; a < ns; ++a) {
        for (int b = 0; b < ns; ++b) {
          const double v = w * sh.value[a] * sh.value[b];
          for (int k = 0; k < ncomp; ++k) local(ncomp * a + k, ncomp * b + k) += v;
        }
      }
    }
    scatter(entries, space.cell(e), space.cell(e), local);
  }
  return from_triplets(space.n_dofs, space.n_dofs, entries);
}

SparseMatrix assemble_stiffness_weighted(const DofMap& space, const Mesh& mesh, const WeightFunction& weight,
                                         ViscousForm form, int degree) {
  const QuadratureRule& rule = quadrature_rule(degree);
  const int ns = shapes_per_component(space);
  const bool vector = space.is_vector();
  const bool symmetric = vector && form == ViscousForm::SymmetricGradient;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(space.num_cells) * space.dofs_per_cell * space.dofs_per_cell);
  LocalMatrix local(space.dofs_per_cell, space.dofs_per_cell);
  for (int e = 0; e < space.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Bary& bary = rule.points[q];
      const double wq = weight(e, bary, geom.map(bary));
      if (!(wq > 0.0) || !std::isfinite(wq)) {
        std::ostringstream msg;
        msg << "assemble_stiffness_weighted: nonpositive weight " << wq << " on element " << e;
        throw std::domain_error(msg.str());
      }
      const LocalShapes sh = local_shapes(geom, bary);
      const double w = rule.weights[q] * geom.area * wq;
      if (!vector) {
        for (int a = 0; a < ns; ++a) {
          for (int b = 0; b < ns; ++b) local(a, b) += w * sh.grad[a].dot(sh.grad[b]);
        }
      } else if (!symmetric) {
        for (int a = 0; a < ns; ++a) {
          for (int b = 0; b < ns; ++b) {
            const double v = w * sh.grad[a].dot(sh.grad[b]);
            local(2 * a, 2 * b) += v;
            local(2 * a + 1, 2 * b + 1) += v;
          }
        }
      } else {
        std::array<Mat2, 8> d;
        for (int a = 0; a < ns; ++a) {
          for (int k = 0; k < 2; ++k) d[2 * a + k] = sym_grad(sh.grad[a], k);
        }
        for (int i = 0; i < 8; ++i) {
          for (int j = 0; j < 8; ++j) local(i, j) += w * d[i].cwiseProduct(d[j]).sum();
        }
      }
    }
    scatter(entries, space.cell(e), space.cell(e), local);
  }
  return from_triplets(space.n_dofs, space.n_dofs, entries);
}

SparseMatrix assemble_stiffness(const DofMap& space, const Mesh& mesh, double weight) {
  return assemble_stiffness_weighted(space, mesh, [weight](int, const Bary&, const Point&) { return weight; });
}

SparseMatrix assemble_convection_skew(const DofMap& space, const Mesh& mesh, const Vector& wind,
                                      const DofMap& wind_space, int degree) {
  check_vector(wind_space, "assemble_convection_skew(wind)");
  if (wind.size() != wind_space.n_dofs) throw std::invalid_argument("assemble_convection_skew: wind length mismatch");
  const QuadratureRule& rule = quadrature_rule(degree);
  const int ns = shapes_per_component(space);
  const int ncomp = space.is_vector() ? 2 : 1;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(space.num_cells) * space.dofs_per_cell * space.dofs_per_cell);
  LocalMatrix local(space.dofs_per_cell, space.dofs_per_cell);
  for (int e = 0; e < space.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const LocalShapes sh = local_shapes(geom, rule.points[q]);
      const Vec2 w = evaluate_vector(wind, wind_space, e, sh).value;
      const double wq = 0.5 * rule.weights[q] * geom.area;
      std::array<double, 4> adv{};
      for (int a = 0; a < ns; ++a) adv[a] = w.dot(sh.grad[a]);
      for (int a = 0; a < ns; ++a) {  // test
        for (int b = 0; b < ns; ++b) {  // trial
          const double v = wq * (adv[b] * sh.value[a] - adv[a] * sh.value[b]);
          for (int k = 0; k < ncomp; ++k) local(ncomp * a + k, ncomp * b + k) += v;
        }
      }
    }
    scatter(entries, space.cell(e), space.cell(e), local);
  }
  return from_triplets(space.n_dofs, space.n_dofs, entries);
}

SparseMatrix assemble_div_coupling(const DofMap& velocity, const DofMap& pressure, const Mesh& mesh) {
  check_vector(velocity, "assemble_div_coupling");
  check_scalar(pressure, "assemble_div_coupling");
  const QuadratureRule& rule = quadrature_rule(kDefaultQuadratureDegree);
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(velocity.num_cells) * 24);
  LocalMatrix local(3, 8);
  for (int e = 0; e < velocity.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const LocalShapes sh = local_shapes(geom, rule.points[q]);
      const double w = rule.weights[q] * geom.area;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 4; ++b) {
          for (int k = 0; k < 2; ++k) local(a, 2 * b + k) += w * sh.value[a] * sh.grad[b][k];
        }
      }
    }
    scatter(entries, pressure.cell(e), velocity.cell(e), local);
  }
  return from_triplets(pressure.n_dofs, velocity.n_dofs, entries);
}

SwimOperator assemble_swim(const DofMap& scalar, const Mesh& mesh, const ModelParams& params) {
  check_scalar(scalar, "assemble_swim");
  const QuadratureRule& rule = quadrature_rule(2);
  const double u = params.swim_speed;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(scalar.num_cells) * 9);
  SwimOperator op;
  op.constant = Vector::Zero(scalar.n_dofs);
  LocalMatrix local(3, 3);
  for (int e = 0; e < scalar.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const LocalShapes sh = local_shapes(geom, rule.points[q]);
      const double w = rule.weights[q] * geom.area;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) local(a, b) += u * w * sh.value[b] * sh.grad[a].y();
      }
    }
    const auto dofs = scalar.cell(e);
    for (int a = 0; a < 3; ++a) op.constant[dofs[a]] += u * params.alpha * geom.area * geom.grad_lambda[a].y();
    scatter(entries, dofs, dofs, local);
  }
  op.matrix = from_triplets(scalar.n_dofs, scalar.n_dofs, entries);
  return op;
}

BuoyancyOperator assemble_buoyancy(const DofMap& velocity, const DofMap& scalar, const Mesh& mesh,
                                   const ModelParams& params) {
  check_vector(velocity, "assemble_buoyancy");
  check_scalar(scalar, "assemble_buoyancy");
  const QuadratureRule& rule = quadrature_rule(kDefaultQuadratureDegree);
  const double g = params.gravity;
  const double scale = -g * params.gamma;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(velocity.num_cells) * 12);
  BuoyancyOperator op;
  op.constant = Vector::Zero(velocity.n_dofs);
  LocalMatrix local(8, 3);
  for (int e = 0; e < velocity.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    const auto vdofs = velocity.cell(e);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const LocalShapes sh = local_shapes(geom, rule.points[q]);
      const double w = rule.weights[q] * geom.area;
      for (int a = 0; a < 4; ++a) {
        op.constant[vdofs[2 * a + 1]] += -g * w * sh.value[a];
        for (int b = 0; b < 3; ++b) local(2 * a + 1, b) += scale * w * sh.value[a] * sh.value[b];
      }
    }
    scatter(entries, vdofs, scalar.cell(e), local);
  }
  op.coupling = from_triplets(velocity.n_dofs, scalar.n_dofs, entries);
  return op;
}

Vector assemble_load(const VectorFunction& f, const DofMap& velocity, const Mesh& mesh, double t, int degree) {
  check_vector(velocity, "assemble_load");
  const QuadratureRule& rule = quadrature_rule(degree);
  Vector load = Vector::Zero(velocity.n_dofs);
  for (int e = 0; e < velocity.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    const auto dofs = velocity.cell(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const LocalShapes sh = local_shapes(geom, rule.points[q]);
      const Vec2 fq = f(geom.map(rule.points[q]), t);
      const double w = rule.weights[q] * geom.area;
      for (int a = 0; a < 4; ++a) {
        load[dofs[2 * a]] += w * fq.x() * sh.value[a];
        load[dofs[2 * a + 1]] += w * fq.y() * sh.value[a];
      }
    }
  }
  return load;
}

Vector assemble_load(const ScalarFunction& f, const DofMap& scalar, const Mesh& mesh, double t, int degree) {
  check_scalar(scalar, "assemble_load");
  const QuadratureRule& rule = quadrature_rule(degree);
  Vector load = Vector::Zero(scalar.n_dofs);
  for (int e = 0; e < scalar.num_cells; ++e) {
    const ElementGeometry geom = element_geometry(mesh, e);
    const auto dofs = scalar.cell(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Bary& bary = rule.points[q];
      const double fq = f(geom.map(bary), t);
      const double w = rule.weights[q] * geom.area;
      for (int a = 0; a < 3; ++a) load[dofs[a]] += w * fq * bary[a];
    }
  }
  return load;
}

Vector integral_weights(const DofMap& scalar, const Mesh& mesh) {
  check_scalar(scalar, "integral_weights");
  Vector w = Vector::Zero(scalar.n_dofs);
  for (int e = 0; e < scalar.num_cells; ++e) {
    const double third = mesh.signed_area(static_cast<std::size_t>(e)) / 3.0;
    for (int dof : scalar.cell(e)) w[dof] += third;
  }
  return w;
}

WeightFunction viscosity_weight(const ModelParams& params, const Vector& concentration, const DofMap& scalar) {
  check_scalar(scalar, "viscosity_weight");
  return [law = params.viscosity, alpha = params.alpha, c = concentration, &scalar](int e, const Bary& bary,
                                                                                    const Point&) {
    const auto dofs = scalar.cell(e);
    const double ch = c[dofs[0]] * bary[0] + c[dofs[1]] * bary[1] + c[dofs[2]] * bary[2];
    return law.value(ch + alpha);
  };
}

std::pair<double, double> viscosity_range(const ModelParams& params, const Vector& concentration,
                                          const DofMap& scalar) {
  const QuadratureRule& rule = quadrature_rule(kDefaultQuadratureDegree);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int e = 0; e < scalar.num_cells; ++e) {
    const auto dofs = scalar.cell(e);
    for (const Bary& bary : rule.points) {
      const double ch =
          concentration[dofs[0]] * bary[0] + concentration[dofs[1]] * bary[1] + concentration[dofs[2]] * bary[2];
      const double nu = params.viscosity.value(ch + params.alpha);
      lo = std::min(lo, nu);
      hi = std::max(hi, nu);
    }
  }
  return {lo, hi};
}

DiscreteOperatorSet assemble_static_operators(const DofMap& velocity, const DofMap& pressure,
                                              const DofMap& concentration, const Mesh& mesh,
                                              const ModelParams& params) {
  DiscreteOperatorSet ops;
  ops.velocity_mass = assemble_mass(velocity, mesh);
  ops.concentration_mass = assemble_mass(concentration, mesh);
  ops.concentration_stiffness = assemble_stiffness(concentration, mesh, params.theta);
  ops.divergence = assemble_div_coupling(velocity, pressure, mesh);
  ops.swim = assemble_swim(concentration, mesh, params);
  ops.buoyancy = assemble_buoyancy(velocity, concentration, mesh, params);
  ops.pressure_weights = integral_weights(pressure, mesh);
  ops.concentration_weights = integral_weights(concentration, mesh);
  return ops;
}

}  // namespace bioconv
