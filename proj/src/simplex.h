#pragma once

#include <Eigen/Dense>

namespace filterstab::internal {

struct LpResult {
  Eigen::VectorXd solution;
  double objective = 0.0;
};

// Dense tableau simplex for
//   maximize c.x  subject to  A x <= b,  x >= 0,
// with b >= 0 so the origin is a feasible starting vertex. Bland's rule is
// used for pivoting, which rules out cycling. Throws SolverNotConverged if
// max_pivots is reached and ValidationError if the problem is unbounded.
LpResult MaximizeFeasibleOrigin(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b,
                                const Eigen::VectorXd& c,
                                int max_pivots = 10000);

}  // namespace filterstab::internal
