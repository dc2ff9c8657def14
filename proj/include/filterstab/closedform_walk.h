#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "filterstab/channels.h"
#include "filterstab/rng.h"

namespace filterstab {

// Random walk observed through a two-point channel:
//   X_{n+1} = X_n + N(1, 1),   Y_n = X_n + 1 or X_n - 1 with probability 1/2.
// Given Y_n = y the state is y - 1 or y + 1, so every filter is a pair of
// atoms whose locations depend only on the observations.

/// Filter at the last observation: weight p on y_current - 1 and 1 - p on
/// y_current + 1.
struct AtomPairFilter {
  double y_current = 0.0;
  double p = 0.5;
};

/// A density on the real line, evaluated in log space.
class ContinuousPrior {
 public:
  static ContinuousPrior Normal(double mean, double std);
  /// Piecewise-linear density through (xs, ys), zero outside; normalized on
  /// construction.
  static ContinuousPrior Table(std::vector<double> xs, std::vector<double> ys);

  double LogDensity(double x) const;
  double Sample(Rng& rng) const;
  /// Same law moved by `offset`.
  ContinuousPrior Shifted(double offset) const;

  nlohmann::json ToJson() const;

 private:
  enum class Kind { kNormal, kTable };
  Kind kind_ = Kind::kNormal;
  double mean_ = 0.0;
  double std_ = 1.0;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> cumulative_;  // mass up to each node
};

/// {"kind": "normal", "mean": m, "std": s} or {"kind": "table", "xs": [..],
/// "ys": [..]}.
ContinuousPrior ContinuousPriorFromJson(const nlohmann::json& spec);

double LogStandardNormalPdf(double u);

/// p = rho(y0 - 1) / (rho(y0 - 1) + rho(y0 + 1)). Throws ZeroEvidence when
/// both densities vanish.
AtomPairFilter CfInit(const ContinuousPrior& prior, double y0);

/// Bayes step through the Gaussian-mixture predictor
///   p N(y, 1) + (1 - p) N(y + 2, 1),  y = state.y_current.
/// Evaluated in log space so that p stays in [0, 1] for any |y|.
AtomPairFilter CfUpdate(const AtomPairFilter& state, double y_next);

struct WalkStepStats {
  int step = 0;
  double mean_gap = 0.0;
  double median_gap = 0.0;
  double max_gap = 0.0;
};

struct WalkReport {
  std::vector<WalkStepStats> rows;  // steps 0..horizon
  // gaps[trial][step] = |p^mu - p^nu|. Filter TV distance is twice this.
  std::vector<std::vector<double>> gaps;
};

/// Trial k samples X_0 ~ mu and the walk from Rng(StreamSeed(seed, k)) in the
/// order x_0, then per step: coin for y_n, increment for x_{n+1}. Both filters
/// consume the same observations.
WalkReport CfDualRun(const ContinuousPrior& mu, const ContinuousPrior& nu,
                     int horizon, int trials, std::uint64_t seed,
                     int threads = 1);

}  // namespace filterstab
