#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "filterstab/finite_pomp.h"

namespace filterstab {

inline constexpr double kDefaultRankTolerance = 1e-9;
inline constexpr std::int64_t kDefaultColumnCap = std::int64_t{1} << 20;
inline constexpr double kDefaultFeasibilityEpsilon = 1e-8;

/// Number of singular values above tol * sigma_max * max(rows, cols).
int NumericRank(const Matrix& m, double tol = kDefaultRankTolerance);

/// Rows are the channel laws QH_x, i.e. the matrix B. One-step observability
/// holds iff this matrix has rank n.
Matrix OneStepMatrix(const FinitePomp& model);

/// [A, TA, ..., T^{n-1}A]. Block k is computed as T * block_{k-1}. By
/// Cayley-Hamilton, further blocks cannot raise the rank; full rank is
/// sufficient but not necessary for n-step observability.
Matrix MarginalMatrix(const FinitePomp& model);

/// Entry (x, c) = P(Y_1 = y_1, ..., Y_N = y_N | X_1 = x), with column index
/// c = sum_t y_t * K^(N - t), so y_1 is the most significant digit.
/// Throws SizeCapExceeded when K^N > column_cap.
Matrix JointMatrix(const FinitePomp& model, int steps,
                   std::int64_t column_cap = kDefaultColumnCap);

enum class VerdictKind {
  kOneStepObservable,
  kNStepObservable,
  kMarginalTestInconclusive,
  kNotObservableUpTo,
};

struct ObservabilityReport {
  Matrix one_step;
  Matrix marginal;
  std::optional<Matrix> joint;  // the last joint matrix examined
  int joint_steps = 0;
  int rank_one_step = 0;
  int rank_marginal = 0;
  int rank_joint = 0;
  double tol = kDefaultRankTolerance;
  VerdictKind verdict = VerdictKind::kNotObservableUpTo;
  int verdict_steps = 0;  // N for NStepObservable, N_max for NotObservableUpTo
  // rank(M) < n: the marginal sufficient test says nothing.
  bool marginal_inconclusive = false;

  std::string VerdictString() const;
};

/// OneStepObservable if rank(A) = n, else NStepObservable(N) for the smallest
/// 2 <= N <= max_steps with a full-rank joint matrix, else
/// NotObservableUpTo(max_steps).
ObservabilityReport ObservabilityVerdict(
    const FinitePomp& model, int max_steps,
    double tol = kDefaultRankTolerance,
    std::int64_t column_cap = kDefaultColumnCap);

struct GSolution {
  Vector g;  // indexed like the joint matrix columns
  double residual_inf = 0.0;
  double sup_norm = 0.0;
  bool feasible = false;
};

/// Minimum-norm least-squares g with J g ~ f, J = JointMatrix(model, steps).
/// feasible is false when ||f - J g||_inf > epsilon or ||g||_inf > bound.
GSolution SolveG(const FinitePomp& model, const Vector& f, int steps,
                 double bound = std::numeric_limits<double>::infinity(),
                 double epsilon = kDefaultFeasibilityEpsilon,
                 double rank_tol = kDefaultRankTolerance,
                 std::int64_t column_cap = kDefaultColumnCap);

}  // namespace filterstab
