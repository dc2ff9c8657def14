#include "filterstab/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "filterstab/error.h"
#include "filterstab/rng.h"
#include "simplex.h"

namespace filterstab {
namespace {

void CheckSameSize(const FiniteDist& p, const FiniteDist& q) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("distributions have sizes " +
                            std::to_string(p.size()) + " and " +
                            std::to_string(q.size()));
  }
}

// Pairwise summation over a contiguous range; the result depends only on the
// order of `values`.
double PairwiseSum(const double* values, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += values[i];
    return s;
  }
  const std::size_t half = count / 2;
  return PairwiseSum(values, half) + PairwiseSum(values + half, count - half);
}

struct MeanAndError {
  double mean = 0.0;
  double standard_error = 0.0;
};

MeanAndError Summarize(const std::vector<double>& values) {
  MeanAndError out;
  const std::size_t count = values.size();
  if (count == 0) return out;
  out.mean = PairwiseSum(values.data(), count) / static_cast<double>(count);
  if (count > 1) {
    std::vector<double> squares(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double d = values[i] - out.mean;
      squares[i] = d * d;
    }
    const double variance = PairwiseSum(squares.data(), count) /
                            static_cast<double>(count - 1);
    out.standard_error = std::sqrt(variance / static_cast<double>(count));
  }
  return out;
}

// (1 + r) ln(1 + r) - r. Near r = 0 the two terms cancel to second order, so
// the alternating series sum_{k >= 2} (-r)^k / (k (k - 1)) is used there.
double Phi(double r) {
  if (std::abs(r) >= 0.1) return (1.0 + r) * std::log1p(r) - r;
  double sum = 0.0;
  double power = -r;
  for (int k = 2; k <= 20; ++k) {
    power *= -r;
    sum += power / (k * (k - 1.0));
  }
  return sum;
}

double TotalVariationVec(const Vector& p, const Vector& q) {
  return (p - q).cwiseAbs().sum();
}

enum Metric {
  kTvFilter,
  kTvPredictor,
  kKlFilter,
  kWeak,
  kBl,
  kTvPredMeas,
  kNumMetrics,
};

}  // namespace

double TotalVariation(const FiniteDist& p, const FiniteDist& q) {
  CheckSameSize(p, q);
  return TotalVariationVec(p.probs(), q.probs());
}

double RelativeEntropy(const FiniteDist& p, const FiniteDist& q) {
  CheckSameSize(p, q);
  // Sum of q * phi(p / q) with phi(t) = t ln t - t + 1 >= 0. Equal to
  // sum_{p > 0} p ln(p / q) for normalized inputs, and free of the
  // cancellation that sum suffers when p is close to q.
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    const double qi = q[i];
    if (qi <= 0.0) {
      if (pi > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    if (pi <= 0.0) {
      total += qi;
      continue;
    }
    total += qi * Phi((pi - qi) / qi);
  }
  return total;
}

PinskerCheck CheckPinsker(const FiniteDist& p, const FiniteDist& q) {
  const double tv = TotalVariation(p, q);
  const double kl = RelativeEntropy(p, q);
  PinskerCheck out;
  if (std::isinf(kl)) {
    out.holds = true;
    out.slack = std::numeric_limits<double>::infinity();
    return out;
  }
  out.slack = std::sqrt(2.0 * kl) - tv;
  out.holds = out.slack >= 0.0;
  return out;
}

Matrix NormalizeTestBank(Matrix bank) {
  for (Eigen::Index r = 0; r < bank.rows(); ++r) {
    const double sup = bank.row(r).cwiseAbs().maxCoeff();
    if (sup > 0.0) bank.row(r) /= sup;
  }
  return bank;
}

Matrix DefaultTestBank(int num_states) {
  if (num_states <= 0) throw ValidationError("bank needs n > 0");
  Matrix bank(num_states + kTestBankRandomProfiles, num_states);
  bank.topRows(num_states).setIdentity();
  Rng rng(SplitMix64(0x7e57ba4cULL + kTestBankVersion));
  for (int j = 0; j < kTestBankRandomProfiles; ++j) {
    const double frequency = 0.5 + 2.5 * UniformUnit(rng);
    const double phase = 2.0 * std::numbers::pi * UniformUnit(rng);
    for (int x = 0; x < num_states; ++x) {
      const double dither = UniformUnit(rng) < 0.5 ? -0.1 : 0.1;
      bank(num_states + j, x) =
          std::sin(2.0 * std::numbers::pi * frequency * x / num_states +
                   phase) +
          dither;
    }
  }
  return NormalizeTestBank(std::move(bank));
}

double WeakGap(const FiniteDist& p, const FiniteDist& q, const Matrix& bank) {
  CheckSameSize(p, q);
  if (bank.cols() != p.size()) {
    throw DimensionMismatch("test bank width does not match state count");
  }
  if (bank.rows() == 0) return 0.0;
  return (bank * (p.probs() - q.probs())).cwiseAbs().maxCoeff();
}

double BoundedLipschitz(const FiniteDist& p, const FiniteDist& q,
                        const Vector& positions) {
  CheckSameSize(p, q);
  const int n = p.size();
  if (positions.size() != n) {
    throw DimensionMismatch("positions must have one entry per state");
  }
  // Substitute u = f + 1 in [0, 2] so that the origin is feasible.
  const int pair_rows = n * (n - 1);
  Matrix A = Matrix::Zero(n + pair_rows, n);
  Vector b(n + pair_rows);
  A.topRows(n).setIdentity();
  b.head(n).setConstant(2.0);
  int row = n;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      A(row, x) = 1.0;
      A(row, y) = -1.0;
      b(row) = std::abs(positions(x) - positions(y));
      ++row;
    }
  }
  const Vector diff = p.probs() - q.probs();
  const internal::LpResult lp =
      internal::MaximizeFeasibleOrigin(A, b, diff);
  const Vector f = lp.solution.array() - 1.0;
  return std::max(0.0, f.dot(diff));
}

MergingReport MergingExperiment(const FinitePomp& model, const FiniteDist& mu,
                                const FiniteDist& nu,
                                const MergingOptions& options) {
  const int n = model.num_states();
  if (mu.size() != n || nu.size() != n) {
    throw DimensionMismatch("priors must match the model state count");
  }
  RequireAbsolutelyContinuous(mu, nu);
  if (options.horizon < 0) throw ValidationError("horizon must be >= 0");
  if (options.trials < 1) throw ValidationError("trials must be >= 1");
  const Matrix bank = options.bank ? NormalizeTestBank(*options.bank)
                                   : DefaultTestBank(n);
  if (bank.cols() != n) {
    throw DimensionMismatch("test bank width does not match state count");
  }
  Vector positions;
  if (options.positions) {
    positions = *options.positions;
    if (positions.size() != n) {
      throw DimensionMismatch("positions must have one entry per state");
    }
  } else {
    positions = Vector::LinSpaced(n, 0.0, n - 1.0);
  }

  const int steps = options.horizon + 1;
  const int trials = options.trials;
  // values[metric][step][trial]
  std::vector<std::vector<std::vector<double>>> values(
      kNumMetrics, std::vector<std::vector<double>>(
                       steps, std::vector<double>(trials, 0.0)));
  std::vector<std::exception_ptr> errors(trials);
  const Matrix& B = model.channel();

  auto run_trial = [&](int trial) {
    const Trajectory traj = SampleTrajectory(
        model, mu, options.horizon, StreamSeed(options.seed, trial));
    FiniteDist pred_mu = mu;
    FiniteDist pred_nu = nu;
    for (int t = 0; t < steps; ++t) {
      if (t > 0) {
        pred_mu = Predict(model, pred_mu);
        pred_nu = Predict(model, pred_nu);
      }
      const FiniteDist filt_mu = Correct(model, pred_mu, traj.outputs[t]);
      const FiniteDist filt_nu = Correct(model, pred_nu, traj.outputs[t]);
      values[kTvFilter][t][trial] = TotalVariation(filt_mu, filt_nu);
      values[kTvPredictor][t][trial] = TotalVariation(pred_mu, pred_nu);
      values[kKlFilter][t][trial] = RelativeEntropy(filt_mu, filt_nu);
      values[kWeak][t][trial] = WeakGap(filt_mu, filt_nu, bank);
      values[kBl][t][trial] = BoundedLipschitz(filt_mu, filt_nu, positions);
      values[kTvPredMeas][t][trial] = TotalVariationVec(
          B.transpose() * pred_mu.probs(), B.transpose() * pred_nu.probs());
      pred_mu = filt_mu;
      pred_nu = filt_nu;
    }
  };

  const int workers = std::max(1, std::min(options.threads, trials));
  auto worker = [&](int w) {
    for (int trial = w; trial < trials; trial += workers) {
      try {
        run_trial(trial);
      } catch (...) {
        errors[trial] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MergingReport report;
  report.horizon = options.horizon;
  report.trials = trials;
  report.seed = options.seed;
  report.rows.resize(steps);
  for (int t = 0; t < steps; ++t) {
    MergingRow& row = report.rows[t];
    row.step = t;
    const MeanAndError tv = Summarize(values[kTvFilter][t]);
    const MeanAndError kl = Summarize(values[kKlFilter][t]);
    row.mean_tv_filter = tv.mean;
    row.se_tv_filter = tv.standard_error;
    row.mean_kl_filter = kl.mean;
    row.se_kl_filter = kl.standard_error;
    row.mean_tv_predictor = Summarize(values[kTvPredictor][t]).mean;
    row.weak_gap = Summarize(values[kWeak][t]).mean;
    row.bl_gap = Summarize(values[kBl][t]).mean;
    row.mean_tv_pred_meas = Summarize(values[kTvPredMeas][t]).mean;
  }
  return report;
}

FiniteDist InvariantDist(const Matrix& transition) {
  const Eigen::Index n = transition.rows();
  if (n == 0 || transition.cols() != n) {
    throw DimensionMismatch("T must be square and non-empty");
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    FiniteDist(transition.row(r).transpose());  // validates the row
  }
  // Row i of lazy^(2^k) is the law after 2^k lazy steps from point mass i.
  // Squaring continues until it is a fixed point so that mass on transient
  // states underflows to exactly zero.
  Matrix lazy = 0.5 * (Matrix::Identity(n, n) + transition);
  for (int k = 0; k < 128; ++k) {
    Matrix squared = lazy * lazy;
    squared.array().colwise() /= squared.rowwise().sum().array();
    const bool fixed = squared == lazy;
    lazy = std::move(squared);
    if (fixed) break;
  }
  for (Eigen::Index r = 1; r < n; ++r) {
    const double spread = (lazy.row(r) - lazy.row(0)).cwiseAbs().maxCoeff();
    if (spread > 1e-9) {
      throw NonUniqueInvariant(
          "power iteration from distinct point masses reached different "
          "limits");
    }
  }
  Vector pi = lazy.colwise().mean().transpose();
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  // A few exact steps of T remove the error accumulated by squaring.
  for (int i = 0; i < 4; ++i) {
    pi = 0.5 * (pi + transition.transpose() * pi);
    pi /= pi.sum();
  }
  return FiniteDist(std::move(pi));
}

HarrisCurve HarrisRelativeEntropyCurve(const Matrix& transition,
                                       const FiniteDist& initial, int steps,
                                       double floor) {
  if (steps < 0) throw ValidationError("steps must be >= 0");
  if (initial.size() != transition.rows()) {
    throw DimensionMismatch("initial law must match T");
  }
  HarrisCurve curve{InvariantDist(transition), {}, true, std::nullopt};
  const double d0 = RelativeEntropy(initial, curve.invariant);
  if (std::isinf(d0)) {
    throw InfiniteInitialDivergence("D(pi_0 || pi) is infinite");
  }
  curve.divergence.reserve(steps + 1);
  Vector law = initial.probs();
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) {
      law = transition.transpose() * law;
      law /= law.sum();
    }
    const double d = RelativeEntropy(FiniteDist(law), curve.invariant);
    if (!curve.divergence.empty() && d > curve.divergence.back() + 1e-12) {
      curve.monotone = false;
    }
    if (!curve.first_below_floor && d < floor) curve.first_below_floor = t;
    curve.divergence.push_back(d);
  }
  return curve;
}

}  // namespace filterstab
