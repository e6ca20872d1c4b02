#ifndef GLMMASYM_EXPFAM_HPP
#define GLMMASYM_EXPFAM_HPP

#include <string>

// One- and two-parameter exponential families under the canonical link:
// cumulant function b and its first three derivatives, the variance
// function, and the non-kernel terms c(y) and d(y,phi) where the family
// defines them.

namespace glmmasym {

enum class Family { gaussian, bernoulli, poisson, gamma };

Family family_from_name(const std::string& name);
std::string family_name(Family f);

// True when the family is an ordinary likelihood only at phi = 1;
// quasi-likelihood use relaxes this to phi > 0.
bool family_dispersion_fixed(Family f);

// b, b', b'' or b''' at the natural parameter eta (order 0..3).
// Throws std::domain_error when eta is outside the natural domain
// (gamma requires eta < 0) and std::invalid_argument for order > 3.
double cumulant(Family f, double eta, int order);

// Natural-parameter domain check.
bool eta_in_domain(Family f, double eta);

// V(mu) = b''((b')^{-1}(mu)).
double variance_function(Family f, double mu);

// Mean-domain check for variance_function.
bool mu_in_domain(Family f, double mu);

// c(y) term of the quasi-likelihood kernel {y*eta - b(eta) + c(y)}/phi.
// Zero for families that do not define one.
double log_density_c(Family f, double y);

// d(y, phi) term outside the kernel; zero where undefined.
double log_density_d(Family f, double y, double phi);

}  // namespace glmmasym

#endif
