#include "simplex.h"

#include <vector>

#include "filterstab/error.h"

namespace filterstab::internal {

LpResult MaximizeFeasibleOrigin(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b,
                                const Eigen::VectorXd& c, int max_pivots) {
  const Eigen::Index rows = A.rows();
  const Eigen::Index vars = A.cols();
  if (b.size() != rows || c.size() != vars) {
    throw DimensionMismatch("simplex: inconsistent dimensions");
  }
  if ((b.array() < 0.0).any()) {
    throw ValidationError("simplex: right-hand side must be non-negative");
  }
  constexpr double kEps = 1e-12;

  // Tableau [A I | b] with objective row [-c 0 | 0] at the bottom.
  const Eigen::Index width = vars + rows + 1;
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(rows + 1, width);
  tab.topLeftCorner(rows, vars) = A;
  tab.block(0, vars, rows, rows).setIdentity();
  tab.col(width - 1).head(rows) = b;
  tab.row(rows).head(vars) = -c.transpose();

  std::vector<Eigen::Index> basis(rows);
  for (Eigen::Index r = 0; r < rows; ++r) basis[r] = vars + r;

  for (int pivot = 0;; ++pivot) {
    if (pivot >= max_pivots) {
      throw SolverNotConverged("simplex: pivot limit reached");
    }
    // Bland: lowest-index column with a negative reduced cost.
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < width - 1; ++j) {
      if (tab(rows, j) < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best_ratio = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (tab(r, enter) <= kEps) continue;
      const double ratio = tab(r, width - 1) / tab(r, enter);
      if (leave < 0 || ratio < best_ratio - kEps ||
          (ratio <= best_ratio + kEps && basis[r] < basis[leave])) {
        leave = r;
        best_ratio = ratio;
      }
    }
    if (leave < 0) throw ValidationError("simplex: problem is unbounded");

    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index r = 0; r <= rows; ++r) {
      if (r == leave) continue;
      const double factor = tab(r, enter);
      if (factor != 0.0) tab.row(r) -= factor * tab.row(leave);
    }
    basis[leave] = enter;
  }

  LpResult result;
  result.solution = Eigen::VectorXd::Zero(vars);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (basis[r] < vars) result.solution(basis[r]) = tab(r, width - 1);
  }
  result.objective = c.dot(result.solution);
  return result;
}

}  // namespace filterstab::internal
