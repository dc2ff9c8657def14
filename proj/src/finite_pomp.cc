#include "filterstab/finite_pomp.h"

#include <cmath>
#include <sstream>
#include <string>

#include "filterstab/error.h"
#include "filterstab/rng.h"

namespace filterstab {
namespace {

void CheckProbabilityVector(const Vector& v, const std::string& what) {
  if (v.size() == 0) throw ValidationError(what + ": empty vector");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || v(i) < 0.0) {
      std::ostringstream msg;
      msg << what << ": entry " << i << " is " << v(i);
      throw ValidationError(msg.str());
    }
  }
  const double total = v.sum();
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": sums to " << total;
    throw ValidationError(msg.str());
  }
}

void CheckOutput(const FinitePomp& model, int y) {
  if (y < 0 || y >= model.num_outputs()) {
    throw ValidationError("output index " + std::to_string(y) +
                          " out of range");
  }
}

void CheckSize(const FinitePomp& model, const FiniteDist& dist) {
  if (dist.size() != model.num_states()) {
    throw DimensionMismatch("distribution has " + std::to_string(dist.size()) +
                            " states, model has " +
                            std::to_string(model.num_states()));
  }
}

// Multiplies weights by likelihood entrywise and normalizes. The product and
// normalizer are accumulated in long double.
FiniteDist Normalize(const Vector& weights, const Vector& likelihood,
                     const char* context) {
  const Eigen::Index n = weights.size();
  std::vector<long double> product(n);
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    product[i] = static_cast<long double>(weights(i)) * likelihood(i);
    total += product[i];
  }
  if (!(total > 0.0L)) {
    throw ZeroEvidence(std::string(context) +
                       ": observation has zero probability");
  }
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = static_cast<double>(product[i] / total);
  }
  return FiniteDist(std::move(out));
}

}  // namespace

FiniteDist::FiniteDist(Vector probs) : probs_(std::move(probs)) {
  CheckProbabilityVector(probs_, "distribution");
}

FiniteDist FiniteDist::Uniform(int size) {
  if (size <= 0) throw ValidationError("uniform distribution needs size > 0");
  return FiniteDist(Vector::Constant(size, 1.0 / size));
}

FiniteDist FiniteDist::PointMass(int size, int index) {
  if (index < 0 || index >= size) {
    throw ValidationError("point mass index out of range");
  }
  Vector v = Vector::Zero(size);
  v(index) = 1.0;
  return FiniteDist(std::move(v));
}

Matrix BuildChannelMatrix(const Vector& noise, const IndexMatrix& assignment,
                          int num_outputs) {
  if (assignment.cols() != noise.size()) {
    throw DimensionMismatch("assignment H has " +
                            std::to_string(assignment.cols()) +
                            " columns, noise Q has " +
                            std::to_string(noise.size()) + " entries");
  }
  if (num_outputs <= 0) throw ValidationError("K must be positive");
  Matrix channel = Matrix::Zero(assignment.rows(), num_outputs);
  for (Eigen::Index x = 0; x < assignment.rows(); ++x) {
    for (Eigen::Index z = 0; z < assignment.cols(); ++z) {
      const int y = assignment(x, z);
      if (y < 0 || y >= num_outputs) {
        std::ostringstream msg;
        msg << "H[" << x << "][" << z << "] = " << y << " outside [0, "
            << num_outputs << ")";
        throw ValidationError(msg.str());
      }
      channel(x, y) += noise(z);
    }
  }
  return channel;
}

FinitePomp::FinitePomp(Matrix transition, Vector noise, IndexMatrix assignment,
                       int num_outputs)
    : transition_(std::move(transition)),
      noise_(std::move(noise)),
      assignment_(std::move(assignment)),
      num_outputs_(num_outputs) {
  const Eigen::Index n = transition_.rows();
  if (n == 0 || transition_.cols() != n) {
    throw DimensionMismatch("T must be square and non-empty");
  }
  if (assignment_.rows() != n) {
    throw DimensionMismatch("H must have one row per state");
  }
  for (Eigen::Index x = 0; x < n; ++x) {
    CheckProbabilityVector(transition_.row(x).transpose(),
                           "T row " + std::to_string(x));
  }
  CheckProbabilityVector(noise_, "Q");
  channel_ = BuildChannelMatrix(noise_, assignment_, num_outputs_);
  for (Eigen::Index x = 0; x < n; ++x) {
    CheckProbabilityVector(channel_.row(x).transpose(),
                           "B row " + std::to_string(x));
  }
}

FiniteDist FilterInit(const FinitePomp& model, const FiniteDist& prior,
                      int y0) {
  CheckSize(model, prior);
  CheckOutput(model, y0);
  return Normalize(prior.probs(), model.channel().col(y0), "filter init");
}

FiniteDist Predict(const FinitePomp& model, const FiniteDist& dist) {
  CheckSize(model, dist);
  Vector next = model.transition().transpose() * dist.probs();
  // Renormalize away the last-ulp drift of the matrix product.
  next /= next.sum();
  return FiniteDist(std::move(next));
}

FiniteDist Correct(const FinitePomp& model, const FiniteDist& predicted,
                   int y) {
  CheckSize(model, predicted);
  CheckOutput(model, y);
  return Normalize(predicted.probs(), model.channel().col(y), "filter update");
}

FiniteDist FilterUpdate(const FinitePomp& model, const FiniteDist& prev,
                        int y) {
  return Correct(model, Predict(model, prev), y);
}

Trajectory SampleTrajectory(const FinitePomp& model, const FiniteDist& prior,
                            int horizon, std::uint64_t seed) {
  CheckSize(model, prior);
  if (horizon < 0) throw ValidationError("horizon must be >= 0");
  Rng rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.states.reserve(horizon + 1);
  traj.outputs.reserve(horizon + 1);
  const Matrix& T = model.transition();
  const Matrix& B = model.channel();
  std::vector<double> row;
  auto draw_row = [&](const Matrix& m, int r) {
    row.assign(m.cols(), 0.0);
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    return SampleCategorical(row, rng);
  };
  const Vector& p0 = prior.probs();
  int x = SampleCategorical(std::span<const double>(p0.data(), p0.size()), rng);
  for (int t = 0; t <= horizon; ++t) {
    if (t > 0) x = draw_row(T, x);
    traj.states.push_back(x);
    traj.outputs.push_back(draw_row(B, x));
  }
  return traj;
}

FiniteDist SmoothInitial(const FinitePomp& model, const FiniteDist& prior,
                         std::span<const int> outputs,
                         std::optional<int> final_state) {
  CheckSize(model, prior);
  if (outputs.empty()) throw ValidationError("empty output sequence");
  for (int y : outputs) CheckOutput(model, y);
  const int n = model.num_states();
  if (final_state && (*final_state < 0 || *final_state >= n)) {
    throw ValidationError("final state out of range");
  }
  const Matrix& T = model.transition();
  const Matrix& B = model.channel();

  // beta_t(x) proportional to P(Y_[t,h] = outputs[t..h], X_h = x_h | X_t = x).
  // Rescaled every step; only the shape matters.
  const std::size_t h = outputs.size() - 1;
  Vector beta = B.col(outputs[h]);
  if (final_state) {
    const double keep = beta(*final_state);
    beta.setZero();
    beta(*final_state) = keep;
  }
  for (std::size_t t = h; t-- > 0;) {
    beta = (B.col(outputs[t]).array() * (T * beta).array()).matrix();
    const double scale = beta.maxCoeff();
    if (!(scale > 0.0)) break;
    beta /= scale;
  }
  return Normalize(prior.probs(), beta, "smoothing");
}

void RequireAbsolutelyContinuous(const FiniteDist& mu, const FiniteDist& nu) {
  if (mu.size() != nu.size()) {
    throw DimensionMismatch("priors have different sizes");
  }
  for (int x = 0; x < mu.size(); ++x) {
    if (mu[x] > 0.0 && nu[x] <= 0.0) {
      throw AbsoluteContinuityViolated("mu[" + std::to_string(x) +
                                       "] > 0 but nu[" + std::to_string(x) +
                                       "] = 0");
    }
  }
}

double RnIdentityGap(const FinitePomp& model, const FiniteDist& mu,
                     const FiniteDist& nu, std::span<const int> outputs) {
  CheckSize(model, mu);
  CheckSize(model, nu);
  RequireAbsolutelyContinuous(mu, nu);
  if (outputs.empty()) throw ValidationError("empty output sequence");

  FiniteDist filter_mu = FilterInit(model, mu, outputs[0]);
  FiniteDist filter_nu = FilterInit(model, nu, outputs[0]);
  for (std::size_t t = 1; t < outputs.size(); ++t) {
    filter_mu = FilterUpdate(model, filter_mu, outputs[t]);
    filter_nu = FilterUpdate(model, filter_nu, outputs[t]);
  }

  const int n = model.num_states();
  Vector density(n);  // dmu/dnu on the support of nu
  for (int x = 0; x < n; ++x) density(x) = nu[x] > 0.0 ? mu[x] / nu[x] : 0.0;

  const double denominator =
      SmoothInitial(model, nu, outputs).probs().dot(density);
  double gap = 0.0;
  for (int x = 0; x < n; ++x) {
    if (!(filter_nu[x] > 0.0)) continue;
    const double lhs = filter_mu[x] / filter_nu[x];
    const double numerator =
        SmoothInitial(model, nu, outputs, x).probs().dot(density);
    gap = std::max(gap, std::abs(lhs - numerator / denominator));
  }
  return gap;
}

}  // namespace filterstab
