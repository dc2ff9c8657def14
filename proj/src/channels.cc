#include "filterstab/channels.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "filterstab/error.h"

namespace filterstab {
namespace {

using nlohmann::json;

std::vector<std::vector<double>> PascalTriangle(int degree) {
  std::vector<std::vector<double>> c(degree + 1);
  for (int i = 0; i <= degree; ++i) {
    c[i].assign(i + 1, 1.0);
    for (int k = 1; k < i; ++k) c[i][k] = c[i - 1][k - 1] + c[i - 1][k];
  }
  return c;
}

double NumberField(const json& spec, const char* name) {
  if (!spec.contains(name) || !spec.at(name).is_number()) {
    throw ValidationError(std::string("missing numeric field \"") + name +
                          "\"");
  }
  return spec.at(name).get<double>();
}

std::vector<double> NumberArray(const json& spec, const char* name) {
  if (!spec.contains(name) || !spec.at(name).is_array()) {
    throw ValidationError(std::string("missing array field \"") + name + "\"");
  }
  std::vector<double> out;
  for (const auto& v : spec.at(name)) {
    if (!v.is_number()) {
      throw ValidationError(std::string("field \"") + name +
                            "\" must contain numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

GridFunction::GridFunction(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.empty() || xs_.size() != ys_.size()) {
    throw ValidationError("grid table needs matching, non-empty xs and ys");
  }
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    if (!(xs_[i] > xs_[i - 1])) {
      throw ValidationError("grid table xs must be strictly increasing");
    }
  }
}

double GridFunction::operator()(double x) const {
  if (x <= xs_.front()) return ys_.front();
  if (x >= xs_.back()) return ys_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
  return ys_[lo] + w * (ys_[hi] - ys_[lo]);
}

GridFunction GridFunction::Inverse() const {
  std::vector<double> xs = ys_;
  std::vector<double> ys = xs_;
  if (xs.size() > 1 && xs.front() > xs.back()) {
    std::reverse(xs.begin(), xs.end());
    std::reverse(ys.begin(), ys.end());
  }
  return GridFunction(std::move(xs), std::move(ys));
}

double EvaluatePolynomial(const Vector& coeffs, double x) {
  double acc = 0.0;
  for (Eigen::Index i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs(i);
  return acc;
}

MomentMatrix AffineMomentMatrix(const MomentOracle& moments, int degree) {
  if (degree < 0) throw ValidationError("degree must be >= 0");
  const auto binom = PascalTriangle(degree);
  MomentMatrix out;
  out.degree = degree;
  out.entries = Matrix::Zero(degree + 1, degree + 1);
  for (int i = 0; i <= degree; ++i) {
    for (int k = 0; k <= i; ++k) {
      const double m = moments(k, i - k);
      if (!std::isfinite(m)) {
        throw NonFiniteMoment("E[a^" + std::to_string(k) + " b^" +
                              std::to_string(i - k) + "] is not finite");
      }
      out.entries(k, i) = binom[i][k] * m;
    }
  }
  out.diag_nonzero = (out.entries.diagonal().array().abs() > 0.0).all();
  return out;
}

Vector AffineSolve(const MomentMatrix& moments, const Vector& beta) {
  const Eigen::Index size = beta.size();
  if (size == 0 || size > moments.degree + 1) {
    throw ValidationError("target has " + std::to_string(size) +
                          " coefficients; moment matrix degree is " +
                          std::to_string(moments.degree));
  }
  // The leading block of an upper-triangular system is self-contained.
  const Matrix& n = moments.entries;
  // Accumulated in long double: the off-diagonal binomial weights grow
  // quickly with the degree.
  std::vector<long double> solved(size, 0.0L);
  Vector alpha = Vector::Zero(moments.degree + 1);
  for (Eigen::Index i = size; i-- > 0;) {
    if (n(i, i) == 0.0) {
      throw SingularDiagonal("E[a^" + std::to_string(i) +
                             "] = 0; the affine channel cannot reproduce "
                             "degree " + std::to_string(i));
    }
    long double rhs = beta(i);
    for (Eigen::Index j = i + 1; j < size; ++j) {
      rhs -= static_cast<long double>(n(i, j)) * solved[j];
    }
    solved[i] = rhs / n(i, i);
    alpha(i) = static_cast<double>(solved[i]);
  }
  return alpha;
}

PiecewiseG PiecewiseG::FromTable(GridFunction table) {
  PiecewiseG g;
  g.breakpoints_ = table.xs();
  g.sample_xs_ = table.xs();
  g.sample_values_ = table.ys();
  for (double v : g.sample_values_) g.sup_norm_ = std::max(g.sup_norm_, std::abs(v));
  g.eval_ = [t = std::move(table)](double y) { return t(y); };
  return g;
}

PiecewiseG PiecewiseG::FromClosedForm(RealFunction eval,
                                      std::vector<double> breakpoints,
                                      std::vector<double> sample_xs) {
  PiecewiseG g;
  g.eval_ = std::move(eval);
  g.breakpoints_ = std::move(breakpoints);
  g.sample_xs_ = std::move(sample_xs);
  g.sample_xs_.insert(g.sample_xs_.end(), g.breakpoints_.begin(),
                      g.breakpoints_.end());
  std::sort(g.sample_xs_.begin(), g.sample_xs_.end());
  g.sample_values_.reserve(g.sample_xs_.size());
  for (double x : g.sample_xs_) {
    const double v = g.eval_(x);
    g.sample_values_.push_back(v);
    g.sup_norm_ = std::max(g.sup_norm_, std::abs(v));
  }
  return g;
}

PiecewiseG IndicatorG(const RealFunction& f, double x_min, double x_max,
                      const RealFunction& noise_cdf,
                      const IndicatorOptions& options) {
  if (!(x_max > x_min)) throw ValidationError("need x_min < x_max");
  if (options.resolution < 2) throw ValidationError("resolution must be >= 2");
  const double base = noise_cdf(x_min);
  if (!(base > options.positivity_eps)) {
    throw PositivityViolated("Q(Z <= x_min) = " + std::to_string(base) +
                             " is not bounded away from zero");
  }
  const int count = options.resolution;
  const double step = (x_max - x_min) / (count - 1);
  std::vector<double> xs(count);
  std::vector<double> integrand(count);
  for (int i = 0; i < count; ++i) {
    xs[i] = (i + 1 == count) ? x_max : x_min + i * step;
    double slope;
    if (options.derivative) {
      slope = (*options.derivative)(xs[i]);
    } else {
      const double h = 1e-5 * std::max(1.0, std::abs(xs[i]));
      slope = (f(xs[i] + h) - f(xs[i] - h)) / (2.0 * h);
    }
    integrand[i] = slope / noise_cdf(xs[i]);
  }
  std::vector<double> values(count, 0.0);
  for (int i = 1; i < count; ++i) {
    values[i] = values[i - 1] +
                0.5 * (xs[i] - xs[i - 1]) * (integrand[i - 1] + integrand[i]);
  }
  const double c = options.c ? *options.c : f(x_max) - values.back();
  for (double& v : values) v += c;
  return PiecewiseG::FromTable(GridFunction(std::move(xs), std::move(values)));
}

PiecewiseG TelescopingG(const RealFunction& f, int half_width, double center,
                        int samples_per_unit) {
  if (half_width < 0) throw ValidationError("M must be >= 0");
  if (samples_per_unit < 1) {
    throw ValidationError("samples_per_unit must be >= 1");
  }
  if (half_width == 0) {
    return PiecewiseG::FromClosedForm([](double) { return 0.0; }, {}, {});
  }
  const int m = half_width;
  const double start = center - m + 1.0;  // first band begins here
  auto eval = [f, m, start](double y) {
    double u = y - start;
    // Snap near-integer offsets so that g(x + 1) and g(x - 1) fall in
    // consistent bands when x + 1 - 2 and x - 1 round differently.
    const double snap_tol = 64.0 * std::numeric_limits<double>::epsilon() *
                            std::max({1.0, std::abs(y), std::abs(start)});
    double band_u = u;
    const double nearest = std::round(u);
    if (std::abs(u - nearest) <= snap_tol) band_u = nearest;
    if (band_u < 0.0) return 0.0;
    double sign = 1.0;
    if (band_u > 2.0 * m) {
      // -g(y - 2) repeatedly until y is back in the top band.
      const double k = std::ceil((band_u - 2.0 * m) / 2.0);
      band_u -= 2.0 * k;
      y -= 2.0 * k;
      if (std::fmod(k, 2.0) != 0.0) sign = -1.0;
    }
    const int j = static_cast<int>(std::floor(band_u / 2.0));
    double sum = 0.0;
    for (int i = 0; i <= j; ++i) {
      const double term = 2.0 * f(y - 1.0 - 2.0 * i);
      sum += (i % 2 == 0) ? term : -term;
    }
    return sign * sum;
  };
  std::vector<double> breakpoints;
  for (int k = 0; k <= m; ++k) breakpoints.push_back(start + 2.0 * k);
  std::vector<double> samples;
  const double lo = start - 1.0;
  const double hi = center + m + 3.0;
  const int count = static_cast<int>((hi - lo) * samples_per_unit) + 1;
  samples.reserve(count + breakpoints.size());
  for (int i = 0; i < count; ++i) samples.push_back(lo + (hi - lo) * i / (count - 1));
  for (double b : breakpoints) {
    samples.push_back(std::nextafter(b, -std::numeric_limits<double>::infinity()));
  }
  return PiecewiseG::FromClosedForm(eval, std::move(breakpoints),
                                    std::move(samples));
}

RealFunction DirectG(RealFunction f, RealFunction h_inverse) {
  return [f = std::move(f), h_inverse = std::move(h_inverse)](double y) {
    return f(h_inverse(y));
  };
}

NoiseLaw NoiseLaw::Uniform(double lo, double hi) {
  if (!(hi > lo)) throw ValidationError("uniform noise needs lo < hi");
  return NoiseLaw{Kind::kUniform, lo, hi};
}

NoiseLaw NoiseLaw::Normal(double mean, double std) {
  if (!(std > 0.0)) throw ValidationError("normal noise needs std > 0");
  return NoiseLaw{Kind::kNormal, mean, std};
}

double NoiseLaw::Density(double z) const {
  if (kind == Kind::kUniform) {
    return (z >= p1 && z <= p2) ? 1.0 / (p2 - p1) : 0.0;
  }
  const double s = (z - p1) / p2;
  return std::exp(-0.5 * s * s) / (p2 * std::sqrt(2.0 * std::numbers::pi));
}

double NoiseLaw::Cdf(double z) const {
  if (kind == Kind::kUniform) {
    if (z <= p1) return 0.0;
    if (z >= p2) return 1.0;
    return (z - p1) / (p2 - p1);
  }
  return 0.5 * std::erfc(-(z - p1) / (p2 * std::numbers::sqrt2));
}

double NoiseLaw::SupportLow() const {
  return kind == Kind::kUniform ? p1 : p1 - 12.0 * p2;
}

double NoiseLaw::SupportHigh() const {
  return kind == Kind::kUniform ? p2 : p1 + 12.0 * p2;
}

MomentOracle AffineMomentOracle(const AffineChannel& channel, double tol) {
  return [channel, tol](int k, int j) {
    const NoiseLaw& q = channel.noise;
    auto term = [&](double z) {
      return std::pow(channel.a(z), k) * std::pow(channel.b(z), j);
    };
    const double value = IntegrateAdaptive(
        [&](double z) { return term(z) * q.Density(z); }, q.SupportLow(),
        q.SupportHigh(), tol);
    const double magnitude = IntegrateAdaptive(
        [&](double z) { return std::abs(term(z)) * q.Density(z); },
        q.SupportLow(), q.SupportHigh(), tol);
    // Zero within quadrature accuracy, e.g. odd moments of symmetric noise.
    return std::abs(value) <= tol * magnitude ? 0.0 : value;
  };
}

double ApplyChannel(const ChannelSpec& channel, const RealFunction& g,
                    double x, double tol,
                    std::span<const double> g_breakpoints) {
  if (const auto* affine = std::get_if<AffineChannel>(&channel)) {
    const NoiseLaw& q = affine->noise;
    return IntegrateAdaptive(
        [&](double z) { return g(affine->a(z) * x + affine->b(z)) * q.Density(z); },
        q.SupportLow(), q.SupportHigh(), tol);
  }
  if (const auto* indicator = std::get_if<IndicatorChannel>(&channel)) {
    // h(x, z) = x when z < x, z otherwise.
    const NoiseLaw& q = indicator->noise;
    const double observed_self = g(x) * q.Cdf(x);
    const double lo = std::max(x, q.SupportLow());
    const double tail = IntegrateAdaptive(
        [&](double z) { return g(z) * q.Density(z); }, lo, q.SupportHigh(),
        tol, g_breakpoints);
    return observed_self + tail;
  }
  if (std::holds_alternative<TwoPointChannel>(channel)) {
    return 0.5 * (g(x + 1.0) + g(x - 1.0));
  }
  const auto& direct = std::get<DirectChannel>(channel);
  return g(direct.h(x));
}

double VerifyS(const RealFunction& g, const ChannelSpec& channel,
               const RealFunction& f, std::span<const double> grid, double tol,
               std::span<const double> g_breakpoints) {
  double worst = 0.0;
  for (double x : grid) {
    worst = std::max(worst,
                     std::abs(f(x) - ApplyChannel(channel, g, x, tol,
                                                  g_breakpoints)));
  }
  return worst;
}

double VerifyS(const PiecewiseG& g, const ChannelSpec& channel,
               const RealFunction& f, std::span<const double> grid,
               double tol) {
  return VerifyS(g.AsFunction(), channel, f, grid, tol, g.breakpoints());
}

RealFunction FunctionFromJson(const json& spec) {
  if (!spec.is_object()) throw ValidationError("function spec must be an object");
  if (spec.contains("poly")) {
    const std::vector<double> c = NumberArray(spec, "poly");
    if (c.empty()) throw ValidationError("poly needs at least one coefficient");
    Vector coeffs = Eigen::Map<const Vector>(c.data(), c.size());
    return [coeffs](double x) { return EvaluatePolynomial(coeffs, x); };
  }
  if (spec.contains("xs")) {
    GridFunction table(NumberArray(spec, "xs"), NumberArray(spec, "ys"));
    return [table](double x) { return table(x); };
  }
  throw ValidationError("function spec needs \"poly\" or \"xs\"/\"ys\"");
}

NoiseLaw NoiseFromJson(const json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) {
    throw ValidationError("noise spec needs a \"kind\"");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "uniform") {
    return NoiseLaw::Uniform(NumberField(spec, "lo"), NumberField(spec, "hi"));
  }
  if (kind == "normal") {
    return NoiseLaw::Normal(NumberField(spec, "mean"), NumberField(spec, "std"));
  }
  throw ValidationError("unknown noise kind \"" + kind + "\"");
}

ChannelSpec ChannelFromJson(const json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) {
    throw ValidationError("channel spec needs a \"kind\"");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "affine") {
    if (!spec.contains("a") || !spec.contains("b") || !spec.contains("noise")) {
      throw ValidationError("affine channel needs \"a\", \"b\" and \"noise\"");
    }
    return AffineChannel{FunctionFromJson(spec.at("a")),
                         FunctionFromJson(spec.at("b")),
                         NoiseFromJson(spec.at("noise"))};
  }
  if (kind == "indicator") {
    if (!spec.contains("noise")) {
      throw ValidationError("indicator channel needs \"noise\"");
    }
    return IndicatorChannel{NoiseFromJson(spec.at("noise"))};
  }
  if (kind == "two_point") return TwoPointChannel{};
  if (kind == "direct") {
    if (!spec.contains("h")) throw ValidationError("direct channel needs \"h\"");
    return DirectChannel{FunctionFromJson(spec.at("h"))};
  }
  throw ValidationError("unknown channel kind \"" + kind + "\"");
}

}  // namespace filterstab
