#ifndef GLMMASYM_OPTIM_HPP
#define GLMMASYM_OPTIM_HPP

#include <Eigen/Dense>
#include <functional>

// Dense BFGS for small smooth problems, gradient supplied or formed by
// central differences. Maximisation is handled by the caller negating the
// objective.

namespace glmmasym {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct MinimizeOptions {
    double grad_tol = 1e-6;       // max-norm of the gradient at the solution
    int max_iterations = 200;
    double fd_step = 1e-5;        // central-difference step, scaled by 1+|theta_k|
    double armijo_c1 = 1e-4;
    int max_line_search = 40;
};

struct MinimizeResult {
    VectorXd x;
    double value = 0.0;
    VectorXd gradient;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

VectorXd central_difference_gradient(const std::function<double(const VectorXd&)>& f,
                                     const VectorXd& x, double step_scale);

MinimizeResult minimize_bfgs(const std::function<double(const VectorXd&)>& f, VectorXd x0,
                             const MinimizeOptions& opts = {});

// Log-Cholesky packing of a symmetric positive definite matrix: the lower
// Cholesky factor stacked column-major with log-transformed diagonal.
// Round-trips exactly up to floating point.
VectorXd log_cholesky_pack(const MatrixXd& spd);
MatrixXd log_cholesky_unpack(const VectorXd& theta, int dim);

}  // namespace glmmasym

#endif
