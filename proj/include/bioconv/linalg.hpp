#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace bioconv {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear mean-value constraint  weights . x = value.
struct MeanConstraint {
  Eigen::VectorXd weights;  // full length, nonzero only on the constrained field
  double value = 0.0;
};

/// Ax = b subject to fixed DOF values and linear mean constraints. Mean
/// constraints are imposed through Lagrange multipliers appended after the
/// primal unknowns.
struct ConstrainedSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  std::map<int, double> dirichlet;
  std::vector<MeanConstraint> mean_constraints;
  /// Groups of DOFs eliminated by static condensation before factorization.
  /// DOFs of different groups must not couple, and grouped DOFs may carry
  /// neither Dirichlet values nor mean weights (element bubbles qualify).
  std::vector<std::vector<int>> local_blocks;

  /// Adds constraints; a DOF constrained twice to different values throws.
  void add_dirichlet(int dof, double value);
};

struct SolveResult {
  Eigen::VectorXd x;             // primal unknowns only
  Eigen::VectorXd multipliers;   // one per mean constraint
  double relative_residual = 0;  // of the full augmented system
  int refinement_steps = 0;
};

/// Symmetric elimination of Dirichlet DOFs: constrained rows and columns are
/// zeroed, the diagonal set to 1 and the right-hand side corrected by the
/// eliminated column contributions.
void apply_dirichlet(SparseMatrix& matrix, Eigen::VectorXd& rhs, const std::map<int, double>& constraints);

/// Builds [A W; W^T 0] for the given mean constraints.
SparseMatrix augment_with_constraints(const SparseMatrix& matrix, const std::vector<MeanConstraint>& constraints);

/// Direct sparse LU solve of the constrained system, after condensing out any
/// local blocks. Throws SolverError if the matrix is singular or the relative
/// residual of the full augmented system exceeds kSolveTolerance.
SolveResult solve(const ConstrainedSystem& system);

inline constexpr double kSolveTolerance = 1e-10;

/// Largest absolute entry.
double max_abs(const SparseMatrix& m);

/// Appends the entries of `block`, shifted and scaled, to a triplet list.
void append_block(std::vector<Triplet>& out, const SparseMatrix& block, int row_offset, int col_offset,
                  double scale = 1.0);

}  // namespace bioconv
