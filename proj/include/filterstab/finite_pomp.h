#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace filterstab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexMatrix = Eigen::MatrixXi;

// Tolerance used when validating that probability vectors sum to one.
inline constexpr double kProbabilityTolerance = 1e-12;

/// A probability vector over a finite state alphabet. Used for priors,
/// filters and one-step predictors. Always non-negative and normalized.
class FiniteDist {
 public:
  /// Validates `probs` (entries >= 0, sum within 1e-12 of one).
  /// Throws ValidationError otherwise.
  explicit FiniteDist(Vector probs);

  static FiniteDist Uniform(int size);
  static FiniteDist PointMass(int size, int index);

  const Vector& probs() const { return probs_; }
  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_(i); }

 private:
  Vector probs_;
};

/// Computes B[x][y] = sum_z Q[z] * 1{H[x][z] == y}.
/// Throws DimensionMismatch when H has the wrong number of columns and
/// ValidationError when an assignment falls outside [0, num_outputs).
Matrix BuildChannelMatrix(const Vector& noise, const IndexMatrix& assignment,
                          int num_outputs);

/// Finite-alphabet partially observed Markov process: X_{t+1} ~ T(X_t, .),
/// Y_t = h(X_t, Z_t) with Z_t ~ Q i.i.d. The noise/assignment pair (Q, H) is
/// the stored parameterization; the channel matrix B is derived from it and
/// used for all computation.
class FinitePomp {
 public:
  /// Throws ValidationError / DimensionMismatch on invalid inputs.
  FinitePomp(Matrix transition, Vector noise, IndexMatrix assignment,
             int num_outputs);

  int num_states() const { return static_cast<int>(transition_.rows()); }
  int num_noise() const { return static_cast<int>(noise_.size()); }
  int num_outputs() const { return num_outputs_; }

  const Matrix& transition() const { return transition_; }
  const Vector& noise() const { return noise_; }
  const IndexMatrix& assignment() const { return assignment_; }
  const Matrix& channel() const { return channel_; }

 private:
  Matrix transition_;
  Vector noise_;
  IndexMatrix assignment_;
  int num_outputs_;
  Matrix channel_;
};

struct Trajectory {
  std::vector<int> states;
  std::vector<int> outputs;
  std::uint64_t seed = 0;
};

/// pi_0[x] proportional to prior[x] * B[x][y0]. Throws ZeroEvidence when y0
/// has zero probability under the prior.
FiniteDist FilterInit(const FinitePomp& model, const FiniteDist& prior,
                      int y0);

/// One-step predictor: returns pi^T T.
FiniteDist Predict(const FinitePomp& model, const FiniteDist& dist);

/// Bayes correction of a predicted law by the likelihood column B[:, y].
FiniteDist Correct(const FinitePomp& model, const FiniteDist& predicted,
                   int y);

/// Filter recursion: Correct(Predict(prev), y).
FiniteDist FilterUpdate(const FinitePomp& model, const FiniteDist& prev,
                        int y);

/// Samples (X_0..X_h, Y_0..Y_h) from a single Rng(seed) stream. Draw order is
/// x_0, y_0, x_1, y_1, ..., x_h, y_h.
Trajectory SampleTrajectory(const FinitePomp& model, const FiniteDist& prior,
                            int horizon, std::uint64_t seed);

/// Conditional law of X_0 given Y_[0,n] = outputs (and X_n = final_state when
/// supplied), computed by a backward likelihood sweep in O(n^2 h).
/// Throws ZeroEvidence when the conditioning event has zero probability.
FiniteDist SmoothInitial(const FinitePomp& model, const FiniteDist& prior,
                         std::span<const int> outputs,
                         std::optional<int> final_state = std::nullopt);

/// Checks the filter Radon-Nikodym identity at time n = outputs.size() - 1:
///
///   pi_n^mu(x) / pi_n^nu(x)
///     = E^nu[dmu/dnu(X_0) | Y, X_n = x] / E^nu[dmu/dnu(X_0) | Y]
///
/// The left side comes from the filter recursion, the right side from
/// SmoothInitial. Returns the largest absolute discrepancy over states with
/// pi_n^nu(x) > 0. Throws AbsoluteContinuityViolated unless mu << nu.
double RnIdentityGap(const FinitePomp& model, const FiniteDist& mu,
                     const FiniteDist& nu, std::span<const int> outputs);

/// Throws AbsoluteContinuityViolated unless mu[x] > 0 implies nu[x] > 0.
void RequireAbsolutelyContinuous(const FiniteDist& mu, const FiniteDist& nu);

}  // namespace filterstab
