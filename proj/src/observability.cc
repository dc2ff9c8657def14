#include "filterstab/observability.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "filterstab/error.h"

namespace filterstab {
namespace {

std::int64_t ColumnCount(int num_outputs, int steps, std::int64_t cap) {
  std::int64_t columns = 1;
  for (int i = 0; i < steps; ++i) {
    if (columns > cap / num_outputs) {
      throw SizeCapExceeded("K^N = " + std::to_string(num_outputs) + "^" +
                            std::to_string(steps) + " exceeds column cap " +
                            std::to_string(cap));
    }
    columns *= num_outputs;
  }
  return columns;
}

}  // namespace

int NumericRank(const Matrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  const double cutoff =
      tol * sigma(0) * static_cast<double>(std::max(m.rows(), m.cols()));
  return static_cast<int>((sigma.array() > cutoff).count());
}

Matrix OneStepMatrix(const FinitePomp& model) { return model.channel(); }

Matrix MarginalMatrix(const FinitePomp& model) {
  const int n = model.num_states();
  const int k = model.num_outputs();
  Matrix m(n, static_cast<Eigen::Index>(n) * k);
  m.leftCols(k) = model.channel();
  for (int block = 1; block < n; ++block) {
    m.middleCols(block * k, k) =
        model.transition() * m.middleCols((block - 1) * k, k);
  }
  return m;
}

Matrix JointMatrix(const FinitePomp& model, int steps,
                   std::int64_t column_cap) {
  if (steps < 1) throw ValidationError("joint matrix needs N >= 1");
  const int k = model.num_outputs();
  ColumnCount(k, steps, column_cap);
  const Matrix& B = model.channel();
  const Matrix& T = model.transition();

  // suffix(x, c) = P(Y_t..Y_N = digits of c | X_t = x), built from t = N
  // down to t = 1. Prepending y_t makes it the most significant digit.
  Matrix suffix = B;
  for (int t = steps - 1; t >= 1; --t) {
    const Matrix propagated = T * suffix;
    const Eigen::Index width = propagated.cols();
    Matrix next(B.rows(), width * k);
    for (int y = 0; y < k; ++y) {
      next.middleCols(y * width, width) =
          B.col(y).asDiagonal() * propagated;
    }
    suffix = std::move(next);
  }
  return suffix;
}

std::string ObservabilityReport::VerdictString() const {
  switch (verdict) {
    case VerdictKind::kOneStepObservable:
      return "OneStepObservable";
    case VerdictKind::kNStepObservable:
      return "NStepObservable(" + std::to_string(verdict_steps) + ")";
    case VerdictKind::kMarginalTestInconclusive:
      return "MarginalTestInconclusive";
    case VerdictKind::kNotObservableUpTo:
      return "NotObservableUpTo(" + std::to_string(verdict_steps) + ")";
  }
  return "unknown";
}

ObservabilityReport ObservabilityVerdict(const FinitePomp& model,
                                         int max_steps, double tol,
                                         std::int64_t column_cap) {
  if (max_steps < 1) throw ValidationError("N_max must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
  const int n = model.num_states();
  ObservabilityReport report;
  report.tol = tol;
  report.one_step = OneStepMatrix(model);
  report.marginal = MarginalMatrix(model);
  report.rank_one_step = NumericRank(report.one_step, tol);
  report.rank_marginal = NumericRank(report.marginal, tol);
  report.marginal_inconclusive = report.rank_marginal < n;

  if (report.rank_one_step == n) {
    report.joint = report.one_step;
    report.joint_steps = 1;
    report.rank_joint = report.rank_one_step;
    report.verdict = VerdictKind::kOneStepObservable;
    report.verdict_steps = 1;
    return report;
  }
  report.joint = report.one_step;
  report.joint_steps = 1;
  report.rank_joint = report.rank_one_step;
  for (int steps = 2; steps <= max_steps; ++steps) {
    Matrix joint = JointMatrix(model, steps, column_cap);
    const int rank = NumericRank(joint, tol);
    report.joint = std::move(joint);
    report.joint_steps = steps;
    report.rank_joint = rank;
    if (rank == n) {
      report.verdict = VerdictKind::kNStepObservable;
      report.verdict_steps = steps;
      return report;
    }
  }
  report.verdict = VerdictKind::kNotObservableUpTo;
  report.verdict_steps = max_steps;
  return report;
}

GSolution SolveG(const FinitePomp& model, const Vector& f, int steps,
                 double bound, double epsilon, double rank_tol,
                 std::int64_t column_cap) {
  if (f.size() != model.num_states()) {
    throw DimensionMismatch("f must have one entry per state");
  }
  if (!(bound > 0.0)) throw ValidationError("bound must be > 0");
  const Matrix joint = JointMatrix(model, steps, column_cap);
  Eigen::JacobiSVD<Matrix> svd(joint,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rank_tol *
                   static_cast<double>(std::max(joint.rows(), joint.cols())));
  GSolution out;
  out.g = svd.solve(f);
  out.residual_inf = (f - joint * out.g).cwiseAbs().maxCoeff();
  out.sup_norm = out.g.size() > 0 ? out.g.cwiseAbs().maxCoeff() : 0.0;
  out.feasible = out.residual_inf <= epsilon && out.sup_norm <= bound;
  return out;
}

}  // namespace filterstab
