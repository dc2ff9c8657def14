#include "filterstab/quadrature.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "filterstab/error.h"

namespace filterstab {
namespace {

using Rule = boost::math::quadrature::gauss<double, 10>;

double Composite(const std::function<double(double)>& f,
                 const std::vector<double>& cuts, int panels_per_piece) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double width = (cuts[i + 1] - cuts[i]) / panels_per_piece;
    for (int p = 0; p < panels_per_piece; ++p) {
      const double a = cuts[i] + p * width;
      const double b = (p + 1 == panels_per_piece) ? cuts[i + 1] : a + width;
      total += Rule::integrate(f, a, b);
    }
  }
  return total;
}

}  // namespace

double IntegrateAdaptive(const std::function<double(double)>& f, double lo,
                         double hi, double tol,
                         std::span<const double> breakpoints,
                         int max_levels) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double previous = Composite(f, cuts, 1);
  for (int level = 1, panels = 2; level <= max_levels; ++level, panels *= 2) {
    const double current = Composite(f, cuts, panels);
    if (!std::isfinite(current)) {
      throw QuadratureNotConverged("integrand is not finite");
    }
    if (std::abs(current - previous) <= tol * std::max(1.0, std::abs(current))) {
      return current;
    }
    previous = current;
  }
  throw QuadratureNotConverged("successive refinements still differ after " +
                               std::to_string(max_levels) + " halvings");
}

}  // namespace filterstab
