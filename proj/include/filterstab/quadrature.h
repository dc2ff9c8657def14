#pragma once

#include <functional>
#include <span>

namespace filterstab {

inline constexpr double kDefaultQuadratureTolerance = 1e-8;

// Composite 10-point Gauss-Legendre on [lo, hi]. The interval is first split
// at the given breakpoints (kinks or jumps of the integrand), then every
// piece is halved repeatedly until two successive estimates of the whole
// integral agree within tol * max(1, |I|). Throws QuadratureNotConverged
// after max_levels halvings.
double IntegrateAdaptive(const std::function<double(double)>& f, double lo,
                         double hi, double tol = kDefaultQuadratureTolerance,
                         std::span<const double> breakpoints = {},
                         int max_levels = 14);

}  // namespace filterstab
