#ifndef GLMMASYM_STUDENTIZE_HPP
#define GLMMASYM_STUDENTIZE_HPP

#include <string>
#include <vector>

#include "glmmasym/asymvar.hpp"
#include "glmmasym/glmm.hpp"

// Plug-in (data-driven) versions of the covariance expansion: sample
// information blocks evaluated at the fitted parameters, expectations
// taken under N(0, Sigma-hat), and the resulting studentised covariance
// estimates and confidence intervals.

namespace glmmasym {

// Sample counterpart of the conditional information blocks at offset u:
// averages of b''/b''' weighted design products over all observations,
// divided by m*n with n the mean group size.
InfoBlocks empirical_info_blocks(const VectorXd& u, const GroupedDataset& data, Family family,
                                 const VectorXd& beta, int dim_random);

// Bundle anchored at the fitted parameters; evaluations share a flattened
// copy of the design.
OmegaBundle empirical_bundle(const GroupedDataset& data, Family family, const VectorXd& beta,
                             const MatrixXd& sigma, double phi);

enum class EHatQuantity { psi6, psi8, psi9, lambda_aa, lambda_ab, phi_mat };

// One studentised expectation; convenience wrapper over the full set.
MatrixXd e_hat(const OmegaBundle& empirical, EHatQuantity quantity, double tol = 1e-8);

struct ParameterInterval {
    std::string parameter;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::string method;  // "one-term" | "two-term"
    double alpha = 0.0;
};

struct StudentizedReport {
    MatrixXd asy_cov_beta;                 // two-term studentised covariance of beta-hat
    MatrixXd asy_cov_vech_sigma;           // two-term studentised covariance of vech(Sigma-hat)
    MatrixXd one_term_cov_beta;            // leading-order plug-in
    MatrixXd one_term_cov_vech_sigma;
    std::vector<ParameterInterval> intervals;
};

// Covariance part only (Eq.-(10)/(11)-style plug-ins). Throws when a
// two-term diagonal entry is negative, carrying the offending matrix in
// the message; that signals a sample too small for the expansion.
StudentizedReport asy_cov_estimates(const GroupedDataset& data, const GlmmSpec& spec,
                                    const FitResult& fit,
                                    const GaussianExpectationOptions& opts = {});

// Adds two-sided studentised intervals at level alpha for every entry of
// beta-hat and vech(Sigma-hat), both methods. The beta_B one-term and
// two-term intervals share the same standard-error path and are therefore
// identical bit for bit.
StudentizedReport confidence_intervals(const GroupedDataset& data, const GlmmSpec& spec,
                                       const FitResult& fit, double alpha,
                                       const GaussianExpectationOptions& opts = {});

// Parameter labels in report order: beta_0..beta_{dF-1}, then the lower
// triangle of Sigma column by column (sigma_11, sigma_21, ...).
std::vector<std::string> parameter_labels(int dim_fixed, int dim_random);

}  // namespace glmmasym

#endif
