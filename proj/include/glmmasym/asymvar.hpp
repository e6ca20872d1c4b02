#ifndef GLMMASYM_ASYMVAR_HPP
#define GLMMASYM_ASYMVAR_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "glmmasym/expfam.hpp"
#include "glmmasym/integrate.hpp"
#include "glmmasym/matcalc.hpp"
#include "glmmasym/rng.hpp"

// Population-level machinery of the two-term covariance expansion: the
// conditional information blocks as functions of the random effect, the
// intermediate kernels built from them, their Gaussian expectations, and
// the assembled one- and two-term covariance matrices, including the
// gaussian and scalar-Poisson closed forms.

namespace glmmasym {

// Per-observation conditional information blocks at a random-effect value:
// second-derivative moments (aa, ab, bb) and third-derivative arrays
// (aaa, aab) of the cumulant, weighted by the design.
struct InfoBlocks {
    MatrixXd aa;      // d_R x d_R
    MatrixXd ab;      // d_R x d_B
    MatrixXd bb;      // d_B x d_B
    ThreeArray aaa;   // d_R x d_R x d_R, symmetric in the first two indices
    ThreeArray aab;   // d_R x d_R x d_B, symmetric in the first two indices
};

// The block functions anchored at one declared parameter point. The
// evaluator must be safe for concurrent calls.
struct OmegaBundle {
    int dim_a = 0;  // d_R
    int dim_b = 0;  // d_F - d_R
    VectorXd beta;
    MatrixXd sigma;
    double phi = 1.0;
    std::function<InfoBlocks(const VectorXd&)> eval;
};

// Population model: the X distribution enters either through a sampler
// (fixed-seed Monte Carlo, cached draws) or through exact block functions.
struct PopulationModel {
    Family family = Family::gaussian;
    VectorXd beta0;
    MatrixXd sigma0;
    double phi = 1.0;
    int dim_random = 0;

    std::function<VectorXd(SplitRng&)> x_sampler;
    long mc_draws = 200000;
    std::uint64_t mc_seed = 1;

    std::function<InfoBlocks(const VectorXd&)> exact_blocks;  // overrides the sampler
};

// Builds the anchored bundle; with a sampler the X draws are taken once up
// front so every evaluation sees the same empirical X distribution.
OmegaBundle population_bundle(const PopulationModel& model);

// Exact-moment bundles for the two closed-form special cases.
OmegaBundle gaussian_exact_bundle(const VectorXd& beta, const MatrixXd& sigma, double phi,
                                  const MatrixXd& second_moment_xx, int dim_random);
OmegaBundle poisson_scalar_bundle(double beta0, double beta1, double sigma2, double phi,
                                  double moment0, double moment1, double moment2);

// Weighted-moment blocks over an explicit set of X rows (each row one draw
// or observation, equal weight); shared by the Monte Carlo population
// bundle and the plug-in sample versions.
InfoBlocks info_blocks_from_rows(const MatrixXd& x_rows, Family family, const VectorXd& beta,
                                 const VectorXd& u, int dim_random);

// Intermediate kernels at a fixed u.
struct PsiVectors {
    VectorXd psi1;  // vech(sigma - u u^T)
    VectorXd psi2;  // aaa (star) aa^{-1}
    VectorXd psi3;  // aab (star) aa^{-1}
    VectorXd psi4;  // D+ vec(aa^{-1} sigma^{-1} {sigma - u u^T - sigma psi2 u^T})
};
struct PsiMatrices {
    MatrixXd psi5;  // aa^{-1} ab
    MatrixXd psi6;  // bb - psi5^T ab   (Schur complement)
    MatrixXd psi7;  // u u^T sigma^{-1} aa^{-1}
    MatrixXd psi8;  // D+ [(u u^T) (x) aa^{-1}] D+^T
    MatrixXd psi9;  // psi1 psi4^T + psi4 psi1^T
};

PsiVectors psi_vectors(const VectorXd& u, const MatrixXd& sigma, const InfoBlocks& blocks);
PsiMatrices psi_matrices(const VectorXd& u, const MatrixXd& sigma, const InfoBlocks& blocks);

// Gaussian expectations of the kernels over U ~ N(0, sigma-anchor).
struct ExpectationMatrices {
    MatrixXd lambda_aa;  // d_R x d_R, symmetrised
    MatrixXd lambda_ab;  // d_R x d_B
    MatrixXd phi_mat;    // d_B x q
    MatrixXd e_psi6;     // d_B x d_B
    MatrixXd e_psi8;     // q x q
    MatrixXd e_psi9;     // q x q
};

ExpectationMatrices expectation_matrices(const OmegaBundle& bundle,
                                         const GaussianExpectationOptions& opts = {});

struct CovarianceReport {
    MatrixXd cov_beta_one_term;        // d_F x d_F
    MatrixXd cov_beta_two_term;        // d_F x d_F
    MatrixXd cov_vech_sigma_one_term;  // q x q
    MatrixXd cov_vech_sigma_two_term;  // q x q
    double m = 0.0;
    double n = 0.0;
};

// Assembles the report from precomputed expectations; the bracket inverse
// is formed by block (Schur) algebra so the beta_B block is exactly the
// inverse of e_psi6.
CovarianceReport assemble_covariances(const ExpectationMatrices& exp_mats, const MatrixXd& sigma,
                                      double phi, double m, double n);

CovarianceReport two_term_covariances(const OmegaBundle& bundle, double m, double n,
                                      const GaussianExpectationOptions& opts = {});

// Gaussian-response closed form of the two-term report.
CovarianceReport gaussian_closed_form(const MatrixXd& sigma0, double phi,
                                      const MatrixXd& second_moment_xx, int dim_random, double m,
                                      double n);

// Scalar-Poisson (d_F = 2, d_R = 1) closed form of the two-term beta
// covariance, from the three exponential moments of X.
MatrixXd poisson_closed_form(double beta0, double beta1, double sigma2, double phi, double moment0,
                             double moment1, double moment2, double m, double n);

}  // namespace glmmasym

#endif
