#ifndef GLMMASYM_INTEGRATE_HPP
#define GLMMASYM_INTEGRATE_HPP

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "glmmasym/matcalc.hpp"

// Deterministic Gaussian-weighted integration on R^d, d <= 3: tensor
// Gauss-Hermite grids transformed by the Cholesky factor of the target
// covariance, with order doubling until successive estimates agree.

namespace glmmasym {

struct QuadratureNode {
    VectorXd point;
    double weight;  // probabilist normalisation: weights sum to 1
};

struct QuadratureRule {
    int order_per_dim = 0;
    std::vector<QuadratureNode> nodes;
};

// Nodes and weights of the order-n Gauss-Hermite rule for the standard
// normal weight (Golub-Welsch on the Hermite Jacobi matrix).
void gauss_hermite_normal(int order, std::vector<double>& nodes, std::vector<double>& weights);

// Nodes and weights of the order-n Gauss-Legendre rule on [a, b].
void gauss_legendre(int order, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

// Tensor-product rule for N(0, sigma), points already transformed by the
// lower Cholesky factor of sigma.
QuadratureRule make_gaussian_rule(int order_per_dim, const MatrixXd& sigma);

struct GaussianExpectationOptions {
    double tol = 1e-8;     // element-wise |a-b| <= tol * max(1, |b|)
    int max_doublings = 2; // successive order doublings allowed
    int initial_order = 0; // 0 selects the per-dimension default
};

struct QuadratureConvergenceError : std::runtime_error {
    QuadratureConvergenceError(const std::string& msg, MatrixXd estimate, double gap_)
        : std::runtime_error(msg), last_estimate(std::move(estimate)), gap(gap_) {}
    MatrixXd last_estimate;
    double gap;
};

int default_gauss_hermite_order(int dim);

// E{f(U)} for U ~ N(0, sigma), f matrix-valued and applied element-wise.
// sigma must be symmetric positive definite with dimension <= 3.
MatrixXd gaussian_expectation(const std::function<MatrixXd(const VectorXd&)>& f,
                              const MatrixXd& sigma,
                              const GaussianExpectationOptions& opts = {});

// Single fixed-order estimate, no convergence control.
MatrixXd gaussian_expectation_fixed_order(const std::function<MatrixXd(const VectorXd&)>& f,
                                          const MatrixXd& sigma, int order_per_dim);

}  // namespace glmmasym

#endif
