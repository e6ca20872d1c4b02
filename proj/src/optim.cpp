#include "glmmasym/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace glmmasym {

VectorXd central_difference_gradient(const std::function<double(const VectorXd&)>& f,
                                     const VectorXd& x, double step_scale) {
    VectorXd grad(x.size());
    VectorXd xp = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = step_scale * (1.0 + std::abs(x[k]));
        const double orig = x[k];
        xp[k] = orig + h;
        const double fp = f(xp);
        xp[k] = orig - h;
        const double fm = f(xp);
        xp[k] = orig;
        grad[k] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

MinimizeResult minimize_bfgs(const std::function<double(const VectorXd&)>& f, VectorXd x0,
                             const MinimizeOptions& opts) {
    const Eigen::Index n = x0.size();
    MinimizeResult res;
    res.x = std::move(x0);
    res.value = f(res.x);
    if (!std::isfinite(res.value)) {
        throw std::invalid_argument("minimize_bfgs: objective not finite at the start point");
    }
    res.gradient = central_difference_gradient(f, res.x, opts.fd_step);

    MatrixXd inv_hessian = MatrixXd::Identity(n, n);
    for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
        if (res.gradient.cwiseAbs().maxCoeff() < opts.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            return res;
        }
        VectorXd direction = -(inv_hessian * res.gradient);
        double slope = direction.dot(res.gradient);
        if (!(slope < 0.0)) {
            // Curvature information went bad; restart from steepest descent.
            inv_hessian.setIdentity();
            direction = -res.gradient;
            slope = direction.dot(res.gradient);
        }

        // Backtracking line search with the sufficient-decrease condition.
        double step = 1.0;
        double new_value = 0.0;
        VectorXd new_x;
        bool accepted = false;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            new_x = res.x + step * direction;
            new_value = f(new_x);
            if (std::isfinite(new_value) &&
                new_value <= res.value + opts.armijo_c1 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.converged = res.gradient.cwiseAbs().maxCoeff() < 10.0 * opts.grad_tol;
            res.message = "line search failed";
            return res;
        }

        VectorXd new_gradient = central_difference_gradient(f, new_x, opts.fd_step);
        const VectorXd s = new_x - res.x;
        const VectorXd y = new_gradient - res.gradient;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (res.iterations == 0) {
                // Scale the initial metric to the first curvature estimate.
                inv_hessian *= sy / y.squaredNorm();
            }
            const double rho = 1.0 / sy;
            const MatrixXd outer_sy = s * y.transpose();
            inv_hessian = inv_hessian - rho * (outer_sy * inv_hessian) -
                          rho * (inv_hessian * outer_sy.transpose()) +
                          (rho * rho * y.dot(inv_hessian * y) + rho) * (s * s.transpose());
        }
        res.x = std::move(new_x);
        res.value = new_value;
        res.gradient = std::move(new_gradient);
    }
    res.converged = res.gradient.cwiseAbs().maxCoeff() < opts.grad_tol;
    res.message = res.converged ? "gradient tolerance reached at iteration cap"
                                : "iteration limit reached";
    return res;
}

VectorXd log_cholesky_pack(const MatrixXd& spd) {
    Eigen::LLT<MatrixXd> llt(spd);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("log_cholesky_pack: matrix is not positive definite");
    }
    const MatrixXd chol_l = llt.matrixL();
    const int d = static_cast<int>(spd.rows());
    VectorXd theta(d * (d + 1) / 2);
    Eigen::Index k = 0;
    for (int j = 0; j < d; ++j) {
        for (int i = j; i < d; ++i) {
            theta[k++] = (i == j) ? std::log(chol_l(i, j)) : chol_l(i, j);
        }
    }
    return theta;
}

MatrixXd log_cholesky_unpack(const VectorXd& theta, int dim) {
    if (theta.size() != static_cast<Eigen::Index>(dim) * (dim + 1) / 2) {
        throw std::invalid_argument("log_cholesky_unpack: wrong parameter length");
    }
    MatrixXd chol_l = MatrixXd::Zero(dim, dim);
    Eigen::Index k = 0;
    for (int j = 0; j < dim; ++j) {
        for (int i = j; i < dim; ++i) {
            chol_l(i, j) = (i == j) ? std::exp(theta[k]) : theta[k];
            ++k;
        }
    }
    return chol_l * chol_l.transpose();
}

}  // namespace glmmasym
