#pragma once

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "filterstab/finite_pomp.h"
#include "filterstab/quadrature.h"

namespace filterstab {

using RealFunction = std::function<double(double)>;

/// Tabulated function with linear interpolation between nodes and constant
/// extension by the boundary values outside [xs.front(), xs.back()].
class GridFunction {
 public:
  /// xs must be strictly increasing, same length as ys, at least one node.
  GridFunction(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

  /// Table of the inverse map. Requires strictly monotone ys.
  GridFunction Inverse() const;

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

double EvaluatePolynomial(const Vector& coeffs, double x);

// ---------------------------------------------------------------------------
// Affine channels h(x, z) = a(z) x + b(z).

/// (k, j) -> E[a(Z)^k b(Z)^j].
using MomentOracle = std::function<double(int, int)>;

struct MomentMatrix {
  int degree = 0;
  // entries(k, i) = N(i, k) = C(i, k) E[a^k b^(i-k)] for k <= i, zero below
  // the diagonal. Maps coefficients of g to coefficients of S(g).
  Matrix entries;
  bool diag_nonzero = false;
};

/// Throws NonFiniteMoment when the oracle returns inf or nan.
MomentMatrix AffineMomentMatrix(const MomentOracle& moments, int degree);

/// Back substitution for beta = N alpha. beta may be shorter than degree + 1
/// (missing high-order coefficients are zero). Throws SingularDiagonal when
/// some E[a^i] = 0.
Vector AffineSolve(const MomentMatrix& moments, const Vector& beta);

// ---------------------------------------------------------------------------
// Bounded g with a finite description.

class PiecewiseG {
 public:
  /// Grid table g; the sup norm is exact.
  static PiecewiseG FromTable(GridFunction table);
  /// Closed-form g evaluated on demand. The sup norm is taken over
  /// `sample_xs` together with the breakpoints.
  static PiecewiseG FromClosedForm(RealFunction eval,
                                   std::vector<double> breakpoints,
                                   std::vector<double> sample_xs);

  double operator()(double y) const { return eval_(y); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& sample_xs() const { return sample_xs_; }
  const std::vector<double>& sample_values() const { return sample_values_; }
  double sup_norm() const { return sup_norm_; }
  RealFunction AsFunction() const { return eval_; }

 private:
  RealFunction eval_;
  std::vector<double> breakpoints_;
  std::vector<double> sample_xs_;
  std::vector<double> sample_values_;
  double sup_norm_ = 0.0;
};

struct IndicatorOptions {
  int resolution = 10000;        // grid points on [x_min, x_max]
  double positivity_eps = 1e-9;  // required lower bound on Q(Z <= x_min)
  // Additive constant. When unset, c = f(x_max) - int f'/F, the unique value
  // for which S(g) = f (rather than f plus a constant).
  std::optional<double> c;
  std::optional<RealFunction> derivative;  // central differences otherwise
};

/// g(x) = c + int_{x_min}^{x} f'(u) / F(u) du on [x_min, x_max] by cumulative
/// trapezoid, extended by its boundary values outside the interval, for the
/// channel h(x, z) = x 1{x > z} + z 1{x <= z}. Throws PositivityViolated when
/// F(x_min) <= positivity_eps.
PiecewiseG IndicatorG(const RealFunction& f, double x_min, double x_max,
                      const RealFunction& noise_cdf,
                      const IndicatorOptions& options = {});

/// g for the two-point channel Y = X +- 1 (probability 1/2 each) such that
/// S(g) = f on [a - M, a + M] and S(g) = 0 elsewhere, built by the telescoping
/// recursion
///   g(y) = 0                   y < a - M + 1
///        = 2 f(y - 1)          y in [a - M + 1, a - M + 3)
///        = 2 f(y - 1) - g(y-2) y in [a - M + 3, a + M + 1]
///        = -g(y - 2)           y > a + M + 1.
/// |g| <= 2 (M + 1) ||f|| <= 4 M ||f||. M = 0 yields g = 0.
PiecewiseG TelescopingG(const RealFunction& f, int half_width, double center,
                        int samples_per_unit = 1000);

/// g = f o h^{-1}; exact for noiseless observation y = h(x).
RealFunction DirectG(RealFunction f, RealFunction h_inverse);

// ---------------------------------------------------------------------------
// Channel specs and S(g)(x) = int g(h(x, z)) Q(dz).

struct NoiseLaw {
  enum class Kind { kUniform, kNormal };
  Kind kind = Kind::kUniform;
  double p1 = -1.0;  // uniform: lo, normal: mean
  double p2 = 1.0;   // uniform: hi, normal: std

  static NoiseLaw Uniform(double lo, double hi);
  static NoiseLaw Normal(double mean, double std);

  double Density(double z) const;
  double Cdf(double z) const;
  // Integration range; the normal law is truncated at 12 standard deviations.
  double SupportLow() const;
  double SupportHigh() const;
};

struct AffineChannel {
  RealFunction a;
  RealFunction b;
  NoiseLaw noise;
};

struct IndicatorChannel {
  NoiseLaw noise;
};

struct TwoPointChannel {};

struct DirectChannel {
  RealFunction h;
};

using ChannelSpec =
    std::variant<AffineChannel, IndicatorChannel, TwoPointChannel,
                 DirectChannel>;

/// E[a^k b^j] under the channel's noise law, by adaptive quadrature.
MomentOracle AffineMomentOracle(const AffineChannel& channel,
                                double tol = 1e-12);

/// S(g)(x). Exact for two-point and direct channels, quadrature otherwise.
double ApplyChannel(const ChannelSpec& channel, const RealFunction& g,
                    double x, double tol = kDefaultQuadratureTolerance,
                    std::span<const double> g_breakpoints = {});

/// sup over grid of |f(x) - S(g)(x)|.
double VerifyS(const RealFunction& g, const ChannelSpec& channel,
               const RealFunction& f, std::span<const double> grid,
               double tol = kDefaultQuadratureTolerance,
               std::span<const double> g_breakpoints = {});
double VerifyS(const PiecewiseG& g, const ChannelSpec& channel,
               const RealFunction& f, std::span<const double> grid,
               double tol = kDefaultQuadratureTolerance);

// ---------------------------------------------------------------------------
// JSON forms.
//   function: {"poly": [c0, c1, ...]} or {"xs": [...], "ys": [...]}
//   noise:    {"kind": "uniform", "lo": .., "hi": ..}
//             {"kind": "normal", "mean": .., "std": ..}
//   channel:  {"kind": "affine", "a": fn, "b": fn, "noise": noise}
//             {"kind": "indicator", "noise": noise}
//             {"kind": "two_point"}
//             {"kind": "direct", "h": fn}

RealFunction FunctionFromJson(const nlohmann::json& spec);
NoiseLaw NoiseFromJson(const nlohmann::json& spec);
ChannelSpec ChannelFromJson(const nlohmann::json& spec);

}  // namespace filterstab
