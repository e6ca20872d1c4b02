#ifndef GLMMASYM_ORACLE_HPP
#define GLMMASYM_ORACLE_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glmmasym/glmm.hpp"
#include "glmmasym/matcalc.hpp"

// Brute-force verifiers for the higher-order expansions: exact per-group
// scores by direct quadrature, the closed-form score approximations, the
// Laplace-type integral-ratio expansion, and the three-term conditional
// mode expansion. Shipped as the `verify` CLI suite and reused by the
// acceptance tests.

namespace glmmasym {

struct ScoreTriple {
    VectorXd score_a;     // with respect to beta_A
    VectorXd score_b;     // with respect to beta_B
    VectorXd score_cov;   // with respect to vech(Sigma)
};

struct ExactScoreOptions {
    int order_per_dim = 80;   // tensor Gauss-Legendre order
    double box_sd = 8.0;      // half-width in posterior standard deviations
};

// Per-group scores as ratios of quadratures, centred and scaled at the
// conditional mode. Feasible for d_R <= 2.
ScoreTriple exact_scores(const Group& group, Family family, const VectorXd& beta,
                         const MatrixXd& sigma, double phi, const ExactScoreOptions& opts = {});

// Closed-form higher-order approximations of the same scores, evaluated at
// the known simulated random effect of the group.
ScoreTriple approx_scores(const Group& group, Family family, const VectorXd& beta,
                          const MatrixXd& sigma, double phi, const VectorXd& u_true);

// Integral-ratio problem: smooth g, c, h on R^d with derivative callbacks
// optional (finite differences otherwise).
struct MiyataProblem {
    std::function<double(const VectorXd&)> g, c, h;
    std::function<VectorXd(const VectorXd&)> grad_g;
    std::function<VectorXd(const VectorXd&)> grad_c;
    std::function<VectorXd(const VectorXd&)> grad_h;
    std::function<MatrixXd(const VectorXd&)> hess_g;
    std::function<MatrixXd(const VectorXd&)> hess_h;
    std::function<ThreeArray(const VectorXd&)> third_h;
    VectorXd newton_start;
};

// Fourth-order Laplace approximation of
//   int g c exp(-n h) / int c exp(-n h)
// about the interior minimiser of h.
double miyata_ratio(const MiyataProblem& problem, double n);

struct UStarCheck {
    VectorXd newton_mode;   // stationary point of the data exponent
    VectorXd three_term;    // expansion about the true random effect
    double gap = 0.0;
};

UStarCheck u_star_expansion_check(const Group& group, Family family, const VectorXd& beta,
                                  const VectorXd& u_true, int dim_random);

// Finite-difference fallbacks shared with the tests.
VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                     double step = 1e-5);
MatrixXd fd_hessian(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                    double step = 1e-4);
ThreeArray fd_third(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                    double step = 1e-3);

// ---- verification suite ----------------------------------------------

struct VerificationRow {
    std::string name;
    bool pass = false;
    std::string details;
};

// Named suites: "matrix", "miyata", "ustar", "scores", or "all".
std::vector<VerificationRow> run_verification_suite(const std::string& suite, int threads = 0);

// Least-squares slope of log(err) on log(n); the rate harness primitive.
double log_log_slope(const std::vector<double>& n_values, const std::vector<double>& errors);

}  // namespace glmmasym

#endif
