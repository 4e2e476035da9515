#include "bioconv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace bioconv {

void ConstrainedSystem::add_dirichlet(int dof, double value) {
  const auto [it, inserted] = dirichlet.emplace(dof, value);
  if (!inserted && it->second != value) {
    std::ostringstream msg;
    msg << "conflicting Dirichlet constraints on dof " << dof << ": " << it->second << " vs " << value;
    throw std::invalid_argument(msg.str());
  }
}

void apply_dirichlet(SparseMatrix& matrix, Eigen::VectorXd& rhs, const std::map<int, double>& constraints) {
  if (constraints.empty()) return;
  const int n = static_cast<int>(matrix.rows());
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  for (const auto& [dof, value] : constraints) {
    if (dof < 0 || dof >= n) {
      throw std::invalid_argument("apply_dirichlet: dof " + std::to_string(dof) + " out of range");
    }
    fixed[dof] = 1;
    values[dof] = value;
  }

  std::vector<Triplet> kept;
  kept.reserve(static_cast<std::size_t>(matrix.nonZeros()));
  for (int col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (fixed[row]) continue;
      if (fixed[col]) {
        rhs[row] -= it.value() * values[col];
      } else {
        kept.emplace_back(row, col, it.value());
      }
    }
  }
  for (const auto& [dof, value] : constraints) {
    kept.emplace_back(dof, dof, 1.0);
    rhs[dof] = value;
  }
  SparseMatrix result(matrix.rows(), matrix.cols());
  result.setFromTriplets(kept.begin(), kept.end());
  matrix = std::move(result);
}

SparseMatrix augment_with_constraints(const SparseMatrix& matrix, const std::vector<MeanConstraint>& constraints) {
  const int n = static_cast<int>(matrix.rows());
  const int m = static_cast<int>(constraints.size());
  if (m == 0) return matrix;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(matrix.nonZeros()));
  append_block(entries, matrix, 0, 0);
  for (int k = 0; k < m; ++k) {
    const auto& w = constraints[k].weights;
    for (int i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      entries.emplace_back(i, n + k, w[i]);
      entries.emplace_back(n + k, i, w[i]);
    }
  }
  SparseMatrix out(n + m, n + m);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

void append_block(std::vector<Triplet>& out, const SparseMatrix& block, int row_offset, int col_offset, double scale) {
  for (int col = 0; col < block.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(block, col); it; ++it) {
      out.emplace_back(static_cast<int>(it.row()) + row_offset, col + col_offset, scale * it.value());
    }
  }
}

double max_abs(const SparseMatrix& m) {
  double best = 0.0;
  for (int col = 0; col < m.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(m, col); it; ++it) best = std::max(best, std::abs(it.value()));
  }
  return best;
}

namespace {

void validate(const ConstrainedSystem& system) {
  const auto n = system.matrix.rows();
  if (system.matrix.cols() != n) throw std::invalid_argument("solve: matrix is not square");
  if (system.rhs.size() != n) throw std::invalid_argument("solve: right-hand side length mismatch");
  for (const auto& [dof, value] : system.dirichlet) {
    if (dof < 0 || dof >= n) throw std::invalid_argument("solve: Dirichlet dof " + std::to_string(dof) + " out of range");
    if (!std::isfinite(value)) throw std::invalid_argument("solve: non-finite Dirichlet value");
  }
  for (std::size_t k = 0; k < system.mean_constraints.size(); ++k) {
    const auto& w = system.mean_constraints[k].weights;
    if (w.size() != n) throw std::invalid_argument("solve: mean constraint weight length mismatch");
    if (w.cwiseAbs().maxCoeff() == 0.0) {
      throw std::invalid_argument("solve: mean constraint " + std::to_string(k) + " has zero weights");
    }
    for (const auto& [dof, value] : system.dirichlet) {
      if (w[dof] != 0.0) {
        throw std::invalid_argument("solve: inconsistent constraints, dof " + std::to_string(dof) +
                                    " is both Dirichlet and in mean constraint " + std::to_string(k));
      }
    }
  }
}

std::string singular_context(const SparseMatrix& matrix, const std::string& detail) {
  std::ostringstream msg;
  msg << "singular matrix (" << matrix.rows() << "x" << matrix.cols() << ", nnz=" << matrix.nonZeros() << ")";
  if (!detail.empty()) msg << ": " << detail;
  return msg.str();
}

using LU = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

// Dirichlet-eliminated, multiplier-augmented matrix and right-hand side.
std::pair<SparseMatrix, Eigen::VectorXd> augmented(const ConstrainedSystem& system) {
  const int n = static_cast<int>(system.matrix.rows());
  const int m = static_cast<int>(system.mean_constraints.size());
  SparseMatrix a = system.matrix;
  Eigen::VectorXd b = system.rhs;
  apply_dirichlet(a, b, system.dirichlet);
  SparseMatrix k = augment_with_constraints(a, system.mean_constraints);
  k.makeCompressed();
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = b;
  for (int j = 0; j < m; ++j) rhs[n + j] = system.mean_constraints[j].value;
  return {std::move(k), std::move(rhs)};
}

double relative_residual(const SparseMatrix& k, const Eigen::VectorXd& z, const Eigen::VectorXd& rhs) {
  const double scale = rhs.norm() > 0.0 ? rhs.norm() : 1.0;
  return (rhs - k * z).norm() / scale;
}

SolveResult split(const Eigen::VectorXd& z, int n, double residual, int steps) {
  if (residual > kSolveTolerance) {
    std::ostringstream msg;
    msg << "solve: relative residual " << residual << " exceeds " << kSolveTolerance;
    throw SolverError(msg.str());
  }
  SolveResult out;
  out.x = z.head(n);
  out.multipliers = z.tail(z.size() - n);
  out.relative_residual = residual;
  out.refinement_steps = steps;
  return out;
}

// Solves with the augmented matrix K = [A W; W^T 0] without factoring its
// dense constraint rows. Each constraint row is pinned to its largest weight,
// giving a sparse K0, and K = K0 + U V^T is recovered with the Woodbury
// identity (rank 2 per constraint).
class AugmentedSolver {
 public:
  AugmentedSolver(const SparseMatrix& a, const std::vector<MeanConstraint>& constraints) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(constraints.size());
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(a.nonZeros()) + 2 * static_cast<std::size_t>(m));
    append_block(entries, a, 0, 0);
    u_ = Eigen::MatrixXd::Zero(n + m, 2 * m);
    std::vector<int> pivots;
    for (int k = 0; k < m; ++k) {
      const Eigen::VectorXd& w = constraints[k].weights;
      int pivot = -1;
      for (int i = 0; i < n; ++i) {
        if (std::find(pivots.begin(), pivots.end(), i) != pivots.end()) continue;
        if (pivot < 0 || std::abs(w[i]) > std::abs(w[pivot])) pivot = i;
      }
      pivots.push_back(pivot);
      entries.emplace_back(pivot, n + k, w[pivot]);
      entries.emplace_back(n + k, pivot, w[pivot]);
      u_.col(k).head(n) = w;
      u_(pivot, k) = 0.0;
      u_(n + k, m + k) = 1.0;
    }
    SparseMatrix k0(n + m, n + m);
    k0.setFromTriplets(entries.begin(), entries.end());
    k0.makeCompressed();
    lu_.compute(k0);
    if (lu_.info() != Eigen::Success) throw SolverError("solve: " + singular_context(k0, lu_.lastErrorMessage()));
    if (m > 0) {
      z_ = lu_.solve(u_);
      // V = U with the two column halves swapped.
      Eigen::MatrixXd vt_z(2 * m, 2 * m);
      vt_z.topRows(m) = u_.rightCols(m).transpose() * z_;
      vt_z.bottomRows(m) = u_.leftCols(m).transpose() * z_;
      capacitance_.compute(Eigen::MatrixXd::Identity(2 * m, 2 * m) + vt_z);
      if (!capacitance_.isInvertible()) {
        throw SolverError("solve: " + singular_context(k0, "mean constraints are degenerate"));
      }
    }
  }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd y = lu_.solve(rhs);
    const int m = static_cast<int>(u_.cols()) / 2;
    if (m == 0) return y;
    Eigen::VectorXd vt_y(2 * m);
    vt_y.head(m) = u_.rightCols(m).transpose() * y;
    vt_y.tail(m) = u_.leftCols(m).transpose() * y;
    return y - z_ * capacitance_.solve(vt_y);
  }

 private:
  LU lu_;
  Eigen::MatrixXd u_, z_;
  Eigen::FullPivLU<Eigen::MatrixXd> capacitance_;
};

SolveResult solve_direct(const ConstrainedSystem& system) {
  const int n = static_cast<int>(system.matrix.rows());
  SparseMatrix a = system.matrix;
  Eigen::VectorXd b = system.rhs;
  apply_dirichlet(a, b, system.dirichlet);
  const AugmentedSolver solver(a, system.mean_constraints);
  const SparseMatrix k = augment_with_constraints(a, system.mean_constraints);
  Eigen::VectorXd rhs(k.rows());
  rhs.head(n) = b;
  for (std::size_t j = 0; j < system.mean_constraints.size(); ++j) rhs[n + static_cast<int>(j)] = system.mean_constraints[j].value;

  Eigen::VectorXd z = solver.solve(rhs);
  double rel = relative_residual(k, z, rhs);
  int steps = 0;
  while (rel > 1e-14 && steps < 3) {
    const Eigen::VectorXd trial = z + solver.solve(rhs - k * z);
    const double next = relative_residual(k, trial, rhs);
    ++steps;
    if (!(next < rel)) break;
    z = trial;
    rel = next;
  }
  if (!z.allFinite()) throw SolverError("solve: " + singular_context(k, "non-finite solution"));
  return split(z, n, rel, steps);
}

// Static condensation: for each block g, x_g = A_gg^{-1} (b_g - A_gr x_r),
// which leaves the Schur complement A_rr - A_rg A_gg^{-1} A_gr on the rest.
SolveResult solve_condensed(const ConstrainedSystem& system) {
  const int n = static_cast<int>(system.matrix.rows());
  std::vector<int> block_of(static_cast<std::size_t>(n), -1);
  for (std::size_t g = 0; g < system.local_blocks.size(); ++g) {
    for (int dof : system.local_blocks[g]) {
      if (dof < 0 || dof >= n) throw std::invalid_argument("solve: local block dof out of range");
      if (block_of[dof] >= 0) throw std::invalid_argument("solve: dof " + std::to_string(dof) + " is in two local blocks");
      if (system.dirichlet.count(dof) > 0) {
        throw std::invalid_argument("solve: inconsistent constraints, local block dof " + std::to_string(dof) +
                                    " is Dirichlet");
      }
      for (const auto& c : system.mean_constraints) {
        if (c.weights[dof] != 0.0) {
          throw std::invalid_argument("solve: inconsistent constraints, local block dof " + std::to_string(dof) +
                                      " carries a mean weight");
        }
      }
      block_of[dof] = static_cast<int>(g);
    }
  }
  std::vector<int> reduced(static_cast<std::size_t>(n), -1);
  int nr = 0;
  for (int i = 0; i < n; ++i) {
    if (block_of[i] < 0) reduced[i] = nr++;
  }

  const Eigen::SparseMatrix<double, Eigen::RowMajor> by_row = system.matrix;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(system.matrix.nonZeros()));
  for (int col = 0; col < system.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(system.matrix, col); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (block_of[row] >= 0 && block_of[col] >= 0 && block_of[row] != block_of[col]) {
        throw std::invalid_argument("solve: local blocks " + std::to_string(block_of[row]) + " and " +
                                    std::to_string(block_of[col]) + " are coupled");
      }
      if (block_of[row] < 0 && block_of[col] < 0) entries.emplace_back(reduced[row], reduced[col], it.value());
    }
  }

  struct Back {
    std::vector<int> cols;
    Eigen::MatrixXd x;  // A_gg^{-1} A_gr
    Eigen::VectorXd y;  // A_gg^{-1} b_g
  };
  std::vector<Back> back(system.local_blocks.size());
  Eigen::VectorXd rhs_r(nr);
  for (int i = 0; i < n; ++i) {
    if (reduced[i] >= 0) rhs_r[reduced[i]] = system.rhs[i];
  }
  for (std::size_t g = 0; g < system.local_blocks.size(); ++g) {
    const auto& dofs = system.local_blocks[g];
    const int m = static_cast<int>(dofs.size());
    auto local = [&](int dof) { return static_cast<int>(std::find(dofs.begin(), dofs.end(), dof) - dofs.begin()); };

    Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(m, m);
    std::vector<int> cols;
    std::vector<std::pair<int, std::pair<int, double>>> agr;  // (local row, (global col, value))
    for (int a = 0; a < m; ++a) {
      for (decltype(by_row)::InnerIterator it(by_row, dofs[a]); it; ++it) {
        const int col = static_cast<int>(it.col());
        if (block_of[col] >= 0) {
          agg(a, local(col)) += it.value();
        } else {
          agr.push_back({a, {col, it.value()}});
          cols.push_back(col);
        }
      }
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    Eigen::MatrixXd agr_dense = Eigen::MatrixXd::Zero(m, static_cast<int>(cols.size()));
    for (const auto& [a, cv] : agr) {
      const auto pos = std::lower_bound(cols.begin(), cols.end(), cv.first) - cols.begin();
      agr_dense(a, pos) += cv.second;
    }

    std::vector<int> rows;
    std::vector<std::pair<int, std::pair<int, double>>> arg;  // (local col, (global row, value))
    for (int a = 0; a < m; ++a) {
      for (SparseMatrix::InnerIterator it(system.matrix, dofs[a]); it; ++it) {
        const int row = static_cast<int>(it.row());
        if (block_of[row] < 0) {
          arg.push_back({a, {row, it.value()}});
          rows.push_back(row);
        }
      }
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    Eigen::MatrixXd arg_dense = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), m);
    for (const auto& [a, rv] : arg) {
      const auto pos = std::lower_bound(rows.begin(), rows.end(), rv.first) - rows.begin();
      arg_dense(pos, a) += rv.second;
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(agg);
    if (!lu.isInvertible()) throw SolverError("solve: singular local block " + std::to_string(g));
    Eigen::VectorXd bg(m);
    for (int a = 0; a < m; ++a) bg[a] = system.rhs[dofs[a]];
    Back& bk = back[g];
    bk.x = lu.solve(agr_dense);
    bk.y = lu.solve(bg);
    const Eigen::MatrixXd schur = arg_dense * bk.x;
    const Eigen::VectorXd shift = arg_dense * bk.y;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const int rr = reduced[rows[r]];
      rhs_r[rr] -= shift[static_cast<int>(r)];
      for (std::size_t c = 0; c < cols.size(); ++c) {
        entries.emplace_back(rr, reduced[cols[c]], -schur(static_cast<int>(r), static_cast<int>(c)));
      }
    }
    bk.cols = std::move(cols);
  }

  ConstrainedSystem small;
  small.matrix.resize(nr, nr);
  small.matrix.setFromTriplets(entries.begin(), entries.end());
  small.rhs = std::move(rhs_r);
  for (const auto& [dof, value] : system.dirichlet) small.dirichlet.emplace(reduced[dof], value);
  for (const auto& c : system.mean_constraints) {
    MeanConstraint rc;
    rc.weights.resize(nr);
    for (int i = 0; i < n; ++i) {
      if (reduced[i] >= 0) rc.weights[reduced[i]] = c.weights[i];
    }
    rc.value = c.value;
    small.mean_constraints.push_back(std::move(rc));
  }
  const SolveResult inner = solve_direct(small);

  Eigen::VectorXd z(n + static_cast<int>(system.mean_constraints.size()));
  for (int i = 0; i < n; ++i) {
    if (reduced[i] >= 0) z[i] = inner.x[reduced[i]];
  }
  for (std::size_t g = 0; g < system.local_blocks.size(); ++g) {
    const Back& bk = back[g];
    Eigen::VectorXd xr(static_cast<int>(bk.cols.size()));
    for (std::size_t c = 0; c < bk.cols.size(); ++c) xr[static_cast<int>(c)] = z[bk.cols[c]];
    const Eigen::VectorXd xg = bk.y - bk.x * xr;
    for (std::size_t a = 0; a < system.local_blocks[g].size(); ++a) z[system.local_blocks[g][a]] = xg[static_cast<int>(a)];
  }
  z.tail(inner.multipliers.size()) = inner.multipliers;
  if (!z.allFinite()) throw SolverError("solve: non-finite solution after condensation");
  const auto [k, rhs] = augmented(system);
  return split(z, n, relative_residual(k, z, rhs), inner.refinement_steps);
}

}  // namespace

SolveResult solve(const ConstrainedSystem& system) {
  validate(system);
  return system.local_blocks.empty() ? solve_direct(system) : solve_condensed(system);
}

}  // namespace bioconv
