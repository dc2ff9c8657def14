#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "filterstab/finite_pomp.h"

namespace filterstab {

// Total variation in the sup_{|f| <= 1} convention: sum_i |p_i - q_i|, so
// values lie in [0, 2]. Half of this is the other common convention; it is
// not used anywhere in this library.
double TotalVariation(const FiniteDist& p, const FiniteDist& q);

// Relative entropy D(p || q) in nats; +inf when p is not << q.
double RelativeEntropy(const FiniteDist& p, const FiniteDist& q);

struct PinskerCheck {
  bool holds = true;
  double slack = 0.0;  // sqrt(2 D) - TV; +inf when D is infinite
};

// TV <= sqrt(2 * D_nats). Same inequality as the base-2 statement with its
// 2 / log2(e) factor.
PinskerCheck CheckPinsker(const FiniteDist& p, const FiniteDist& q);

inline constexpr int kTestBankVersion = 1;
inline constexpr int kTestBankRandomProfiles = 16;

// Coordinate indicators followed by kTestBankRandomProfiles seeded smooth
// profiles with a +-1 dither, each scaled to sup norm 1. Rows are functions
// over states. The bank contents depend only on n and kTestBankVersion.
Matrix DefaultTestBank(int num_states);

// Scales each non-zero row to sup norm 1.
Matrix NormalizeTestBank(Matrix bank);

// max over bank rows f of |sum_x f(x) (p_x - q_x)|. A lower bound on the
// supremum over all bounded continuous f. Rows must have sup norm <= 1.
double WeakGap(const FiniteDist& p, const FiniteDist& q, const Matrix& bank);

// Bounded-Lipschitz distance with states embedded at `positions`:
// max sum_x f_x (p_x - q_x) s.t. |f_x| <= 1, |f_x - f_y| <= |pos_x - pos_y|.
// Solved exactly as a linear program.
double BoundedLipschitz(const FiniteDist& p, const FiniteDist& q,
                        const Vector& positions);

struct MergingRow {
  int step = 0;
  double mean_tv_filter = 0.0;
  double se_tv_filter = 0.0;
  double mean_tv_predictor = 0.0;
  double mean_kl_filter = 0.0;
  double se_kl_filter = 0.0;
  double weak_gap = 0.0;
  double bl_gap = 0.0;
  double mean_tv_pred_meas = 0.0;
};

struct MergingOptions {
  int horizon = 50;
  int trials = 500;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<Matrix> bank;       // defaults to DefaultTestBank(n)
  std::optional<Vector> positions;  // defaults to 0, 1, ..., n - 1
};

struct MergingReport {
  int horizon = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  int bank_version = kTestBankVersion;
  std::vector<MergingRow> rows;  // one per step 0..horizon
};

// Samples `trials` trajectories under mu (trial k uses StreamSeed(seed, k)),
// runs the mu- and nu-initialized filters and predictors on each, and
// averages the gaps over trials. Every column is a mean over P^mu.
// The predictive-measurement column compares P(Y_n | Y_[0,n-1]) under the
// two priors. Results are independent of `threads`.
MergingReport MergingExperiment(const FinitePomp& model, const FiniteDist& mu,
                                const FiniteDist& nu,
                                const MergingOptions& options);

/// Stationary law of a row-stochastic T. Power iteration on the lazy chain
/// (I + T) / 2 is started from every point mass; distinct limits raise
/// NonUniqueInvariant.
FiniteDist InvariantDist(const Matrix& transition);

struct HarrisCurve {
  FiniteDist invariant;
  std::vector<double> divergence;  // D(pi_t || pi), t = 0..steps
  bool monotone = true;            // non-increasing within 1e-12
  std::optional<int> first_below_floor;
};

/// Marginal laws pi_t = pi_0 T^t and their relative entropy to the invariant
/// law. Throws InfiniteInitialDivergence when D(pi_0 || pi) = inf.
HarrisCurve HarrisRelativeEntropyCurve(const Matrix& transition,
                                       const FiniteDist& initial, int steps,
                                       double floor = 1e-8);

}  // namespace filterstab
