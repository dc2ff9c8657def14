// Acceptance gate. With no argument every criterion runs and prints one
// PASS/FAIL line; with a criterion name only that one runs. The exit status
// is non-zero when any criterion that ran failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "filterstab/channels.h"
#include "filterstab/cli.h"
#include "filterstab/closedform_walk.h"
#include "filterstab/diagnostics.h"
#include "filterstab/finite_pomp.h"
#include "filterstab/model_io.h"
#include "filterstab/observability.h"
#include "grid_filter.h"
#include "test_support.h"

namespace filterstab {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double Binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

std::vector<double> Grid(double lo, double hi, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
  return out;
}

double MaxDiff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return (a - b).cwiseAbs().maxCoeff();
}

void GoldenFourState(Outcome& o) {
  const auto start = Clock::now();
  const FinitePomp model = FourStateExample();
  Matrix a(4, 2);
  a << 0, 1, 0, 1, 1, 0, 1, 0;
  Matrix t(4, 4);
  t << 0, 0.25, 0.25, 0.5, 0.5, 0, 0, 0.5, 0, 0.25, 0.25, 0.5, 0.5, 0, 0, 0.5;
  Matrix m(4, 8);
  m << 0, 1, 0.75, 0.25, 0.5625, 0.4375, 0.609375, 0.390625,  //
      0, 1, 0.5, 0.5, 0.625, 0.375, 0.59375, 0.40625,         //
      1, 0, 0.75, 0.25, 0.5625, 0.4375, 0.609375, 0.390625,   //
      1, 0, 0.5, 0.5, 0.625, 0.375, 0.59375, 0.40625;
  Matrix joint(4, 4);
  joint << 0, 0, 0.75, 0.25, 0, 0, 0.5, 0.5, 0.75, 0.25, 0, 0, 0.5, 0.5, 0, 0;

  const ObservabilityReport report = ObservabilityVerdict(model, 3);
  const Matrix joint2 = JointMatrix(model, 2);
  o.Require(MaxDiff(report.one_step, a) <= 1e-12, "A");
  o.Require(MaxDiff(model.transition(), t) <= 1e-12, "T");
  o.Require(MaxDiff(report.marginal, m) <= 1e-12, "M");
  o.Require(report.rank_marginal == 3, "rank(M) = 3");
  o.Require(MaxDiff(joint2, joint) <= 1e-12, "joint N=2");
  o.Require(NumericRank(joint2) == 4, "rank(joint) = 4");
  o.Require(report.VerdictString() == "NStepObservable(2)", "verdict");
  const double elapsed = Seconds(start);
  o.Require(elapsed < 1.0, "runtime < 1 s");
  o.detail << "rank(M)=" << report.rank_marginal
           << " rank(joint2)=" << NumericRank(joint2)
           << " verdict=" << report.VerdictString() << " time=" << elapsed
           << "s";
}

void AffineExample(Outcome& o) {
  const AffineChannel channel{[](double z) { return z * z; },
                              [](double z) { return z; },
                              NoiseLaw::Uniform(-1.0, 1.0)};
  const MomentMatrix mm = AffineMomentMatrix(AffineMomentOracle(channel), 12);
  double worst = 0.0;
  int mismatches = 0;
  for (int n = 0; n <= 12; ++n) {
    for (int k = 0; k <= n; ++k) {
      const double diff =
          std::abs(mm.entries(k, n) - Binomial(n, k) / (n + k + 1));
      worst = std::max(worst, diff);
      if (diff > 1e-12) ++mismatches;
    }
  }
  o.Require(worst <= 1e-12, "moment matrix vs C(n,k)/(n+k+1)");

  // Round trips at degrees 1..12. The condition number of N grows to about
  // 2e9 at degree 12, so the rounding of beta alone can move alpha by more
  // than 1e-10 there; the low-degree error is reported separately.
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  auto round_trip_error = [&](int degree) {
    double worst_trip = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vector alpha(degree + 1);
      for (int i = 0; i <= degree; ++i) alpha(i) = coeff(rng);
      // beta = N alpha, rounded once from an extended-precision product.
      Vector beta(degree + 1);
      for (int k = 0; k <= degree; ++k) {
        long double sum = 0.0L;
        for (int i = 0; i <= degree; ++i) {
          sum += static_cast<long double>(mm.entries(k, i)) * alpha(i);
        }
        beta(k) = static_cast<double>(sum);
      }
      const Vector solved = AffineSolve(mm, beta).head(degree + 1);
      worst_trip = std::max(worst_trip, (solved - alpha).cwiseAbs().maxCoeff());
    }
    return worst_trip;
  };
  double round_trip_low = 0.0;
  double round_trip = 0.0;
  for (int degree = 1; degree <= 12; ++degree) {
    const double error = round_trip_error(degree);
    round_trip = std::max(round_trip, error);
    if (degree <= 8) round_trip_low = std::max(round_trip_low, error);
  }
  o.Require(round_trip <= 1e-10, "affine_solve round trip");

  const MomentMatrix cubic = AffineMomentMatrix(AffineMomentOracle(channel), 3);
  const Eigen::Vector4d beta(1.0, -0.5, 0.25, 0.1);
  const Vector alpha = AffineSolve(cubic, beta);
  const double residual = VerifyS(
      [alpha](double y) { return EvaluatePolynomial(alpha, y); }, channel,
      [beta](double x) { return EvaluatePolynomial(beta, x); },
      Grid(-10.0, 10.0, 201));
  o.Require(residual < 1e-6, "verify_S on [-10, 10]");
  o.detail << "formula max|diff|=" << worst << " (" << mismatches
           << " entries off, N(2,1)=" << mm.entries(1, 2)
           << ") round_trip(deg<=12)=" << round_trip
           << " (deg<=8: " << round_trip_low << ") residual=" << residual;
}

void Telescoping(Outcome& o) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> width(1, 5);
  double worst_band = 0.0, worst_outside = 0.0, worst_ratio = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    RealFunction f;
    if (trial % 2 == 0) {
      const double a1 = unit(rng), a2 = unit(rng), w1 = 4 * unit(rng),
                   w2 = 6 * unit(rng), phase = 3 * unit(rng);
      f = [=](double x) {
        return a1 * std::sin(w1 * x + phase) + a2 * std::cos(w2 * x);
      };
    } else {
      std::vector<double> xs = Grid(-120.0, 120.0, 481), ys(481);
      for (double& y : ys) y = unit(rng);
      const GridFunction table(xs, ys);
      f = [table](double x) { return table(x); };
    }
    const int m = width(rng);
    const double center = 100 * unit(rng);
    const PiecewiseG g = TelescopingG(f, m, center);
    auto s = [&](double x) { return 0.5 * (g(x + 1) + g(x - 1)); };
    double f_sup = 0.0;
    for (double x : Grid(center - m, center + m, 4001)) {
      f_sup = std::max(f_sup, std::abs(f(x)));
    }
    std::uniform_real_distribution<double> band(center - m, center + m);
    for (int i = 0; i < 500; ++i) {
      const double x = band(rng);
      worst_band = std::max(worst_band, std::abs(s(x) - f(x)));
    }
    for (double x : {center - m, center + m}) {
      worst_band = std::max(worst_band, std::abs(s(x) - f(x)));
    }
    std::uniform_real_distribution<double> gap(1e-9, 10.0);
    for (int i = 0; i < 200; ++i) {
      worst_outside = std::max(worst_outside, std::abs(s(center + m + gap(rng))));
      worst_outside = std::max(worst_outside, std::abs(s(center - m - gap(rng))));
    }
    if (f_sup > 0) worst_ratio = std::max(worst_ratio, g.sup_norm() / (4 * m * f_sup));
  }
  o.Require(worst_band <= 1e-10, "S(g) = f on band");
  o.Require(worst_outside <= 1e-10, "S(g) = 0 outside");
  o.Require(worst_ratio <= 1.0 + 1e-12, "||g|| <= 4M||f||");
  o.detail << "band=" << worst_band << " outside=" << worst_outside
           << " max ||g||/(4M||f||)=" << worst_ratio;
}

void RnIdentity(Outcome& o) {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> states(1, 5), noise(1, 4), outputs(1, 4),
      horizon(0, 6);
  double worst = 0.0, worst_brute = 0.0;
  int enumerated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = states(rng);
    const FinitePomp model = testing::RandomModel(rng, n, noise(rng), outputs(rng));
    const FiniteDist mu(testing::RandomProbabilities(rng, n));
    const FiniteDist nu(testing::RandomProbabilities(rng, n));
    const Trajectory traj =
        SampleTrajectory(model, mu, horizon(rng), StreamSeed(303, trial));
    worst = std::max(worst, RnIdentityGap(model, mu, nu, traj.outputs));
    if (n > 3) continue;
    ++enumerated;
    const Vector pi_mu = testing::BruteFilter(model, mu.probs(), traj.outputs);
    const Vector pi_nu = testing::BruteFilter(model, nu.probs(), traj.outputs);
    const Vector density = mu.probs().cwiseQuotient(nu.probs());
    const double denominator =
        testing::BruteSmoothInitial(model, nu.probs(), traj.outputs).dot(density);
    FiniteDist filter_mu = FilterInit(model, mu, traj.outputs[0]);
    for (std::size_t t = 1; t < traj.outputs.size(); ++t) {
      filter_mu = FilterUpdate(model, filter_mu, traj.outputs[t]);
    }
    worst_brute = std::max(worst_brute,
                           (filter_mu.probs() - pi_mu).cwiseAbs().maxCoeff());
    for (int x = 0; x < n; ++x) {
      if (!(pi_nu(x) > 0.0)) continue;
      const double numerator =
          testing::BruteSmoothInitial(model, nu.probs(), traj.outputs, x)
              .dot(density);
      worst_brute = std::max(
          worst_brute, std::abs(pi_mu(x) / pi_nu(x) - numerator / denominator));
    }
  }
  o.Require(worst < 1e-10, "identity gap");
  o.Require(worst_brute < 1e-10, "path enumeration cross-check");
  o.detail << "max gap=" << worst << " enumeration max diff=" << worst_brute
           << " (" << enumerated << " models with n <= 3)";
}

void Pinsker(Outcome& o) {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> size(2, 10);
  int violations = 0;
  double min_slack = INFINITY;
  for (int i = 0; i < 10000; ++i) {
    const int n = size(rng);
    const FiniteDist p(testing::RandomProbabilities(rng, n, i % 2 == 0));
    const FiniteDist q(testing::RandomProbabilities(rng, n, i % 3 != 0));
    const PinskerCheck check = CheckPinsker(p, q);
    if (!check.holds) ++violations;
    min_slack = std::min(min_slack, check.slack);
  }
  o.Require(violations == 0, "no violations");
  o.detail << "violations=" << violations << " min slack=" << min_slack;
}

void Harris(Outcome& o) {
  Matrix t(2, 2);
  t << 0.9, 0.1, 0.1, 0.9;
  const HarrisCurve curve =
      HarrisRelativeEntropyCurve(t, FiniteDist::PointMass(2, 0), 60);
  o.Require(std::abs(curve.divergence[0] - std::numbers::ln2) <= 1e-12,
            "D_0 = ln 2");
  bool strict = true;
  for (std::size_t s = 1; s < curve.divergence.size(); ++s) {
    strict = strict && curve.divergence[s] < curve.divergence[s - 1];
  }
  o.Require(strict, "strictly decreasing");
  o.Require(curve.divergence[47] < 1e-8, "D_47 < 1e-8");

  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> size(2, 6);
  int non_monotone = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = size(rng);
    Matrix chain(n, n);
    for (int r = 0; r < n; ++r) {
      chain.row(r) = testing::RandomProbabilities(rng, n).transpose();
    }
    const HarrisCurve random_curve = HarrisRelativeEntropyCurve(
        chain, FiniteDist(testing::RandomProbabilities(rng, n, false)), 100);
    for (std::size_t s = 1; s < random_curve.divergence.size(); ++s) {
      if (random_curve.divergence[s] > random_curve.divergence[s - 1] + 1e-12) {
        ++non_monotone;
        break;
      }
    }
  }
  o.Require(non_monotone == 0, "random chains non-increasing");
  o.detail << "D_0-ln2=" << curve.divergence[0] - std::numbers::ln2
           << " D_47=" << curve.divergence[47] << " first<1e-8 at t="
           << curve.first_below_floor.value_or(-1)
           << " non-monotone random chains=" << non_monotone;
}

void MergingTrend(Outcome& o) {
  const auto start = Clock::now();
  MergingOptions options;
  options.horizon = 50;
  options.trials = 500;
  options.seed = 20240601;
  options.threads = 1;
  Vector nu(4);
  nu << 0.7, 0.1, 0.1, 0.1;
  const MergingReport report = MergingExperiment(
      FourStateExample(), FiniteDist::Uniform(4), FiniteDist(nu), options);
  const double elapsed = Seconds(start);
  const auto& rows = report.rows;
  o.Require(rows[50].mean_tv_filter < 0.25 * rows[0].mean_tv_filter,
            "tv(50) < tv(0)/4");
  int kl_breaks = 0;
  for (int s = 0; s < 50; ++s) {
    const double slack = 2.0 * std::max(rows[s].se_kl_filter, rows[s + 1].se_kl_filter);
    if (rows[s + 1].mean_kl_filter > rows[s].mean_kl_filter + slack) ++kl_breaks;
  }
  o.Require(kl_breaks == 0, "KL non-increasing within 2 SE");
  o.Require(rows[50].mean_tv_pred_meas < rows[0].mean_tv_pred_meas,
            "predictive measurement gap shrinks");
  o.Require(elapsed < 30.0, "runtime < 30 s");
  o.detail << "tv(0)=" << rows[0].mean_tv_filter
           << " tv(50)=" << rows[50].mean_tv_filter
           << " kl(0)=" << rows[0].mean_kl_filter
           << " kl(50)=" << rows[50].mean_kl_filter
           << " pred_meas(0)=" << rows[0].mean_tv_pred_meas
           << " pred_meas(50)=" << rows[50].mean_tv_pred_meas
           << " time=" << elapsed << "s";
}

void NonObservableControl(Outcome& o) {
  IndexMatrix h(3, 2);
  h << 0, 1, 0, 1, 0, 1;
  const FinitePomp model(Matrix::Identity(3, 3), Eigen::Vector2d(0.5, 0.5), h, 2);
  MergingOptions options;
  options.horizon = 50;
  options.trials = 200;
  options.seed = 11;
  const MergingReport report =
      MergingExperiment(model, FiniteDist(Eigen::Vector3d(0.2, 0.3, 0.5)),
                        FiniteDist(Eigen::Vector3d(0.6, 0.3, 0.1)), options);
  double spread = 0.0;
  for (const MergingRow& row : report.rows) {
    spread = std::max(spread,
                      std::abs(row.mean_tv_filter - report.rows[0].mean_tv_filter));
  }
  o.Require(spread <= 1e-12, "tv constant");
  o.detail << "tv=" << report.rows[0].mean_tv_filter << " max drift=" << spread;
}

void ClosedFormWalk(Outcome& o) {
  const ContinuousPrior mu = ContinuousPrior::Normal(0.0, 1.0);
  const ContinuousPrior nu = ContinuousPrior::Normal(5.0, 2.0);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const ContinuousPrior* prior : {&mu, &nu}) {
      Rng rng(StreamSeed(606, seed));
      std::normal_distribution<double> increment(1.0, 1.0);
      double x = mu.Sample(rng);
      long y = testing::Lattice(x + (UniformUnit(rng) < 0.5 ? 1.0 : -1.0));
      testing::GridFilter grid(*prior, y);
      AtomPairFilter filter = CfInit(*prior, y * testing::kSpacing);
      worst = std::max(worst, std::abs(filter.p - grid.p()));
      for (int t = 1; t <= 50; ++t) {
        x += increment(rng);
        y = testing::Lattice(x + (UniformUnit(rng) < 0.5 ? 1.0 : -1.0));
        grid.Update(y);
        filter = CfUpdate(filter, y * testing::kSpacing);
        worst = std::max(worst, std::abs(filter.p - grid.p()));
      }
    }
  }
  o.Require(worst < 1e-6, "grid oracle");
  const WalkReport report = CfDualRun(mu, nu, 50, 200, 7);
  o.Require(report.rows[50].median_gap < 0.05, "median gap at step 50");
  o.detail << "grid max diff=" << worst
           << " median gap(50)=" << report.rows[50].median_gap
           << " mean gap(0)=" << report.rows[0].mean_gap;
}

void Determinism(Outcome& o) {
  const std::string data = FILTERSTAB_DATA_DIR;
  const std::vector<std::vector<std::string>> commands{
      {"observability", "--model", data + "/four_state.json"},
      {"merging", "--model", data + "/four_state.json", "--nu",
       "0.7,0.1,0.1,0.1", "--horizon", "30", "--trials", "200", "--seed", "3"},
      {"merging", "--model", data + "/four_state.json", "--nu",
       "0.7,0.1,0.1,0.1", "--horizon", "10", "--format", "json"},
      {"walk", "--mu", R"({"kind":"normal","mean":0,"std":1})", "--nu",
       R"({"kind":"normal","mean":5,"std":2})", "--trials", "100"},
      {"harris", "--model", data + "/two_state_chain.json", "--mu", "1,0"},
      {"channels-verify", "--model", data + "/affine_channel.json"},
      {"channels-verify", "--model", data + "/indicator_channel.json"},
      {"channels-verify", "--model", data + "/two_point_channel.json"},
      {"channels-verify", "--model", data + "/direct_channel.json"},
      {"reproduce-paper"},
  };
  int differing = 0;
  for (const auto& base : commands) {
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "1", "8"}) {
      auto args = base;
      args.insert(args.end(), {"--threads", threads});
      std::ostringstream out, err;
      const int code = RunCli(args, out, err);
      o.Require(code == 0, base[0] + " exit " + std::to_string(code));
      outputs.push_back(out.str());
    }
    if (outputs[0] != outputs[1] || outputs[0] != outputs[2] ||
        outputs[0].empty()) {
      ++differing;
      o.Require(false, base[0] + " output differs");
    }
  }
  // The same through separate processes of the installed executable.
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "filterstab_acceptance";
  std::filesystem::create_directories(dir);
  int process_differing = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<std::string> bytes;
    for (const char* threads : {"1", "1", "8"}) {
      const std::filesystem::path out =
          dir / ("out_" + std::to_string(c) + "_" + std::to_string(bytes.size()));
      std::string line = std::string("'") + FILTERSTAB_CLI + "'";
      for (const auto& arg : commands[c]) line += " '" + arg + "'";
      line += std::string(" --threads ") + threads + " --out '" + out.string() + "'";
      const int status = std::system(line.c_str());
      o.Require(status == 0, commands[c][0] + " process exit");
      bytes.push_back(ReadTextFile(out));
    }
    if (bytes[0] != bytes[1] || bytes[0] != bytes[2] || bytes[0].empty()) {
      ++process_differing;
      o.Require(false, commands[c][0] + " process output differs");
    }
  }
  std::filesystem::remove_all(dir);
  o.detail << commands.size() << " commands x {run 1, run 2, threads 8}: "
           << differing << " differing in-process, " << process_differing
           << " differing as separate processes";
}

struct Criterion {
  const char* name;
  void (*run)(Outcome&);
};

constexpr Criterion kCriteria[] = {
    {"golden_four_state", GoldenFourState},
    {"affine_example", AffineExample},
    {"telescoping", Telescoping},
    {"rn_identity", RnIdentity},
    {"pinsker", Pinsker},
    {"harris", Harris},
    {"merging_trend", MergingTrend},
    {"non_observable_control", NonObservableControl},
    {"closed_form_walk", ClosedFormWalk},
    {"determinism", Determinism},
};

bool RunOne(const Criterion& c) {
  Outcome o;
  try {
    c.run(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what();
  }
  std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail.str()
            << std::endl;
  return o.pass;
}

}  // namespace
}  // namespace filterstab

int main(int argc, char** argv) {
  using filterstab::kCriteria;
  if (argc > 2) {
    std::cerr << "usage: acceptance [criterion]\n";
    return 2;
  }
  bool all_pass = true;
  bool found = false;
  for (const auto& c : kCriteria) {
    if (argc == 2 && argv[1] != std::string(c.name)) continue;
    found = true;
    all_pass = filterstab::RunOne(c) && all_pass;
  }
  if (!found) {
    std::cerr << "unknown criterion " << argv[1] << "\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
