#pragma once

#include <functional>
#include <utility>

#include "bioconv/fem.hpp"
#include "bioconv/linalg.hpp"
#include "bioconv/params.hpp"

namespace bioconv {

/// Weight evaluated at a quadrature point of an element.
using WeightFunction = std::function<double(int element, const Bary& bary, const Point& x)>;

/// M_ij = int phi_j phi_i. Vector spaces are block diagonal per component.
SparseMatrix assemble_mass(const DofMap& space, const Mesh& mesh, int degree = kMassQuadratureDegree);

/// A_ij = int w grad(phi_j) : grad(phi_i), or int w D(phi_j) : D(phi_i) for
/// the symmetric-gradient form on vector spaces. A nonpositive or non-finite
/// weight at any quadrature point throws std::domain_error.
SparseMatrix assemble_stiffness_weighted(const DofMap& space, const Mesh& mesh, const WeightFunction& weight,
                                         ViscousForm form = ViscousForm::Gradient,
                                         int degree = kDefaultQuadratureDegree);

SparseMatrix assemble_stiffness(const DofMap& space, const Mesh& mesh, double weight = 1.0);

/// Skew-symmetric convection with a discrete wind from the vector space:
/// N_ij = 1/2 int (w . grad phi_j) phi_i - 1/2 int (w . grad phi_i) phi_j.
/// Works on scalar P1 and vector P1+bubble spaces.
SparseMatrix assemble_convection_skew(const DofMap& space, const Mesh& mesh, const Vector& wind,
                                      const DofMap& wind_space, int degree = kConvectionQuadratureDegree);

/// D_qj = int q div(phi_j), rows indexed by pressure DOFs.
SparseMatrix assemble_div_coupling(const DofMap& velocity, const DofMap& pressure, const Mesh& mesh);

/// Upward swimming. matrix(i,j) = U int phi_j d(phi_i)/dx2 and
/// constant(i) = U alpha int d(phi_i)/dx2.
struct SwimOperator {
  SparseMatrix matrix;
  Vector constant;
};
SwimOperator assemble_swim(const DofMap& scalar, const Mesh& mesh, const ModelParams& params);

/// Buoyancy -g((1 + gamma c) i2, v) split into constant(i) = -g int phi_i . i2
/// and coupling = -g gamma G with G_ij = int phi_j (phi_i . i2).
struct BuoyancyOperator {
  SparseMatrix coupling;  // velocity rows, concentration columns
  Vector constant;
};
BuoyancyOperator assemble_buoyancy(const DofMap& velocity, const DofMap& scalar, const Mesh& mesh,
                                   const ModelParams& params);

/// L_i = int f . phi_i at time t.
Vector assemble_load(const VectorFunction& f, const DofMap& velocity, const Mesh& mesh, double t,
                     int degree = kDefaultQuadratureDegree);
Vector assemble_load(const ScalarFunction& f, const DofMap& scalar, const Mesh& mesh, double t,
                     int degree = kDefaultQuadratureDegree);

/// int phi_i for a scalar P1 space (row sums of its mass matrix).
Vector integral_weights(const DofMap& scalar, const Mesh& mesh);

/// nu(c_h + alpha) evaluated pointwise from a P1 concentration. The result
/// keeps a reference to `scalar`.
WeightFunction viscosity_weight(const ModelParams& params, const Vector& concentration, const DofMap& scalar);

/// Smallest and largest nu(c_h + alpha) over all quadrature points.
std::pair<double, double> viscosity_range(const ModelParams& params, const Vector& concentration,
                                          const DofMap& scalar);

/// Operators that do not depend on the lagged state; built once per run.
struct DiscreteOperatorSet {
  SparseMatrix velocity_mass;
  SparseMatrix concentration_mass;
  SparseMatrix concentration_stiffness;  // theta (grad c, grad r)
  SparseMatrix divergence;
  SwimOperator swim;
  BuoyancyOperator buoyancy;
  Vector pressure_weights;
  Vector concentration_weights;
};

DiscreteOperatorSet assemble_static_operators(const DofMap& velocity, const DofMap& pressure,
                                              const DofMap& concentration, const Mesh& mesh,
                                              const ModelParams& params);

}  // namespace bioconv
