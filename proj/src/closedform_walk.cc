#include "filterstab/closedform_walk.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "filterstab/error.h"

namespace filterstab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogSumExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Weight of the lower atom given log-likelihoods of the lower and upper
// candidate atoms: 1 / (1 + exp(upper - lower)).
double LowerAtomWeight(double log_lower, double log_upper) {
  if (log_lower == kNegInf && log_upper == kNegInf) {
    throw ZeroEvidence("both candidate atoms have zero density");
  }
  if (log_upper == kNegInf) return 1.0;
  if (log_lower == kNegInf) return 0.0;
  const double d = log_upper - log_lower;
  if (std::isnan(d)) throw ZeroEvidence("atom weights are undefined");
  return d > 0.0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
}

double Median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

double LogStandardNormalPdf(double u) {
  return -0.5 * u * u - 0.5 * std::log(2.0 * std::numbers::pi);
}

ContinuousPrior ContinuousPrior::Normal(double mean, double std) {
  if (!(std > 0.0) || !std::isfinite(mean)) {
    throw ValidationError("normal prior needs finite mean and std > 0");
  }
  ContinuousPrior prior;
  prior.kind_ = Kind::kNormal;
  prior.mean_ = mean;
  prior.std_ = std;
  return prior;
}

ContinuousPrior ContinuousPrior::Table(std::vector<double> xs,
                                       std::vector<double> ys) {
  GridFunction check(xs, ys);  // validates ordering and sizes
  if (xs.size() < 2) throw ValidationError("table prior needs two nodes");
  for (double y : ys) {
    if (!(y >= 0.0) || !std::isfinite(y)) {
      throw ValidationError("table prior density must be non-negative");
    }
  }
  std::vector<double> cumulative(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    cumulative[i] =
        cumulative[i - 1] + 0.5 * (xs[i] - xs[i - 1]) * (ys[i - 1] + ys[i]);
  }
  const double total = cumulative.back();
  if (!(total > 0.0)) throw ValidationError("table prior has zero mass");
  for (double& y : ys) y /= total;
  for (double& c : cumulative) c /= total;
  ContinuousPrior prior;
  prior.kind_ = Kind::kTable;
  prior.xs_ = std::move(xs);
  prior.ys_ = std::move(ys);
  prior.cumulative_ = std::move(cumulative);
  return prior;
}

double ContinuousPrior::LogDensity(double x) const {
  if (kind_ == Kind::kNormal) {
    return LogStandardNormalPdf((x - mean_) / std_) - std::log(std_);
  }
  if (x < xs_.front() || x > xs_.back()) return kNegInf;
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t hi = std::clamp<std::size_t>(
      static_cast<std::size_t>(it - xs_.begin()), 1, xs_.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
  const double density = ys_[lo] + w * (ys_[hi] - ys_[lo]);
  return density > 0.0 ? std::log(density) : kNegInf;
}

double ContinuousPrior::Sample(Rng& rng) const {
  if (kind_ == Kind::kNormal) {
    std::normal_distribution<double> normal(mean_, std_);
    return normal(rng);
  }
  const double u = UniformUnit(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t hi = static_cast<std::size_t>(it - cumulative_.begin());
  hi = std::clamp<std::size_t>(hi, 1, xs_.size() - 1);
  const std::size_t lo = hi - 1;
  const double width = xs_[hi] - xs_[lo];
  const double target = u - cumulative_[lo];
  // Solve y_lo t + (y_hi - y_lo) t^2 / (2 width) = target for t in [0, width].
  const double slope = (ys_[hi] - ys_[lo]) / width;
  double t;
  if (std::abs(slope) < 1e-300) {
    t = ys_[lo] > 0.0 ? target / ys_[lo] : 0.0;
  } else {
    const double disc = std::max(0.0, ys_[lo] * ys_[lo] + 2.0 * slope * target);
    t = 2.0 * target / (ys_[lo] + std::sqrt(disc));
  }
  return xs_[lo] + std::clamp(t, 0.0, width);
}

ContinuousPrior ContinuousPrior::Shifted(double offset) const {
  ContinuousPrior out = *this;
  out.mean_ += offset;
  for (double& x : out.xs_) x += offset;
  return out;
}

nlohmann::json ContinuousPrior::ToJson() const {
  if (kind_ == Kind::kNormal) {
    return {{"kind", "normal"}, {"mean", mean_}, {"std", std_}};
  }
  return {{"kind", "table"}, {"xs", xs_}, {"ys", ys_}};
}

ContinuousPrior ContinuousPriorFromJson(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) {
    throw ValidationError("continuous prior needs a \"kind\"");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  try {
    if (kind == "normal") {
      return ContinuousPrior::Normal(spec.at("mean").get<double>(),
                                     spec.at("std").get<double>());
    }
    if (kind == "table") {
      return ContinuousPrior::Table(spec.at("xs").get<std::vector<double>>(),
                                    spec.at("ys").get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("continuous prior: ") + e.what());
  }
  throw ValidationError("unknown continuous prior kind \"" + kind + "\"");
}

AtomPairFilter CfInit(const ContinuousPrior& prior, double y0) {
  return AtomPairFilter{
      y0, LowerAtomWeight(prior.LogDensity(y0 - 1.0), prior.LogDensity(y0 + 1.0))};
}

AtomPairFilter CfUpdate(const AtomPairFilter& state, double y_next) {
  const double p = std::clamp(state.p, 0.0, 1.0);
  const double log_p = p > 0.0 ? std::log(p) : kNegInf;
  const double log_q = p < 1.0 ? std::log1p(-p) : kNegInf;
  const double y = state.y_current;
  auto log_predictor = [&](double u) {
    return LogSumExp(log_p + LogStandardNormalPdf(u - y),
                     log_q + LogStandardNormalPdf(u - y - 2.0));
  };
  // The channel likelihood 1/2 is common to both atoms and cancels.
  return AtomPairFilter{
      y_next, LowerAtomWeight(log_predictor(y_next - 1.0),
                              log_predictor(y_next + 1.0))};
}

WalkReport CfDualRun(const ContinuousPrior& mu, const ContinuousPrior& nu,
                     int horizon, int trials, std::uint64_t seed,
                     int threads) {
  if (horizon < 0) throw ValidationError("horizon must be >= 0");
  if (trials < 1) throw ValidationError("trials must be >= 1");
  const int steps = horizon + 1;
  WalkReport report;
  report.gaps.assign(trials, std::vector<double>(steps, 0.0));
  std::vector<std::exception_ptr> errors(trials);

  auto run_trial = [&](int trial) {
    Rng rng(StreamSeed(seed, trial));
    std::normal_distribution<double> increment(1.0, 1.0);
    double x = mu.Sample(rng);
    AtomPairFilter filt_mu;
    AtomPairFilter filt_nu;
    for (int t = 0; t < steps; ++t) {
      const double y = UniformUnit(rng) < 0.5 ? x + 1.0 : x - 1.0;
      if (t == 0) {
        filt_mu = CfInit(mu, y);
        filt_nu = CfInit(nu, y);
      } else {
        filt_mu = CfUpdate(filt_mu, y);
        filt_nu = CfUpdate(filt_nu, y);
      }
      report.gaps[trial][t] = std::abs(filt_mu.p - filt_nu.p);
      x += increment(rng);
    }
  };

  const int workers = std::max(1, std::min(threads, trials));
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
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  report.rows.resize(steps);
  std::vector<double> column(trials);
  for (int t = 0; t < steps; ++t) {
    double sum = 0.0;
    double worst = 0.0;
    for (int k = 0; k < trials; ++k) {
      column[k] = report.gaps[k][t];
      sum += column[k];
      worst = std::max(worst, column[k]);
    }
    report.rows[t] = WalkStepStats{t, sum / trials, Median(column), worst};
  }
  return report;
}

}  // namespace filterstab
