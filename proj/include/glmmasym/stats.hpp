#ifndef GLMMASYM_STATS_HPP
#define GLMMASYM_STATS_HPP

// Scalar probability helpers shared across modules.

namespace glmmasym {

// Standard normal cumulative distribution function.
double normal_cdf(double x);

// Inverse standard normal CDF, rational initial guess refined by one
// Halley step against erfc; absolute accuracy well below 1e-9.
double normal_quantile(double p);

}  // namespace glmmasym

#endif
