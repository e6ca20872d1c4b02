#ifndef GLMMASYM_GLMM_HPP
#define GLMMASYM_GLMM_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "glmmasym/dataset.hpp"
#include "glmmasym/matcalc.hpp"
#include "glmmasym/optim.hpp"

// Two-level GLMM fitting: per-group conditional-mode Newton solves, the
// Laplace-approximate quasi-log-likelihood, quasi-Newton maximisation over
// (beta, log-Cholesky(Sigma)) and the Pearson dispersion plug-in.

namespace glmmasym {

struct FitOptions {
    double outer_tol = 1e-6;    // gradient max-norm of the outer objective
    int outer_max_iter = 200;
    double inner_tol = 1e-10;   // gradient max-norm of the inner solve
    int inner_max_iter = 50;
};

struct FitResult {
    VectorXd beta_hat;                 // d_F, leading d_R entries paired with random effects
    MatrixXd sigma_hat;                // d_R x d_R, SPD
    double phi_hat = 1.0;
    std::vector<VectorXd> u_star;      // conditional modes, one per group
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    bool sigma_boundary = false;       // smallest eigenvalue of sigma_hat < 1e-8
    bool phi_boundary = false;         // Pearson estimate at the zero boundary
    std::string message;

    VectorXd beta_a(int dim_random) const { return beta_hat.head(dim_random); }
    VectorXd beta_b(int dim_random) const { return beta_hat.tail(beta_hat.size() - dim_random); }
};

// Per-group score/curvature sums at random-effect value u: first and second
// derivative blocks and, optionally, the third-derivative arrays.
struct GroupDerivatives {
    VectorXd score_a;     // sum_j (y - b') x_A
    VectorXd score_b;     // sum_j (y - b') x_B
    MatrixXd hess_aa;     // sum_j b'' x_A x_A^T
    MatrixXd hess_ab;     // sum_j b'' x_A x_B^T
    MatrixXd hess_bb;     // sum_j b'' x_B x_B^T
    ThreeArray third_aaa; // sum_j b''' (x_A)_r (x_A)_s (x_A)_t
    ThreeArray third_aab; // sum_j b''' (x_A)_r (x_A)_s (x_B)_t
};

GroupDerivatives group_derivatives(const Group& group, Family family, const VectorXd& beta,
                                   const VectorXd& u, int dim_random, bool with_third);

struct InnerMode {
    VectorXd u;           // the solved mode
    MatrixXd hess_aa;     // sum_j b'' x_A x_A^T at the mode (no dispersion factor)
    int iterations = 0;
};

// Conditional (posterior) mode of the group's random effect: maximises the
// group exponent of the integrand, prior term included. This is the
// Laplace expansion point used by the fitting objective. For gaussian
// responses it has the ridge-regression closed form.
InnerMode inner_mode(const Group& group, Family family, const VectorXd& beta,
                     const MatrixXd& sigma, double phi, const FitOptions& opts = {},
                     const VectorXd* warm_start = nullptr);

// Stationary point of the data part of the exponent alone (no prior):
// the target of the higher-order expansions in the oracle suite. Fails
// when the group carries no curvature information (e.g. separation).
InnerMode unpenalized_mode(const Group& group, Family family, const VectorXd& beta, int dim_random,
                           const FitOptions& opts = {}, const VectorXd* warm_start = nullptr);

// Laplace-approximate quasi-log-likelihood at (beta, sigma, phi).
// warm/out mode caches are optional; per-group contributions are summed in
// sorted order so the value is independent of group ordering.
double laplace_quasi_loglik(const GroupedDataset& data, const GlmmSpec& spec,
                            const VectorXd& beta, const MatrixXd& sigma, double phi,
                            const FitOptions& opts = {},
                            std::vector<VectorXd>* mode_cache = nullptr);

// Maximum quasi-likelihood fit over (beta, log-Cholesky(Sigma)) with the
// dispersion handled per spec.phi_mode.
FitResult fit(const GroupedDataset& data, const GlmmSpec& spec, const FitOptions& opts = {});

struct PearsonDispersion {
    double value = 0.0;
    bool zero_boundary = false;  // all residuals vanished
};

// Method-of-moments dispersion: residual sum of squared Pearson residuals
// over sum(n_i) - d_F degrees of freedom, means evaluated at the
// conditional modes.
PearsonDispersion pearson_dispersion(const GroupedDataset& data, const GlmmSpec& spec,
                                     const FitResult& fit);

// Fixed-effects-only quasi-likelihood fit (no random effects); used as a
// degenerate-variance reference.
VectorXd fit_glm_fixed_effects(const GroupedDataset& data, Family family, double phi = 1.0,
                               const FitOptions& opts = {});

}  // namespace glmmasym

#endif
