#include "glmmasym/integrate.hpp"

#include <cmath>
#include <string>

namespace glmmasym {

namespace {

// Golub-Welsch: eigen-decompose the symmetric tridiagonal Jacobi matrix of
// the orthogonal polynomial family; eigenvalues are the nodes, squared
// first eigenvector components give the weights.
void golub_welsch(const VectorXd& off_diag, double weight_total, std::vector<double>& nodes,
                  std::vector<double>& weights) {
    const int n = static_cast<int>(off_diag.size()) + 1;
    MatrixXd jacobi = MatrixXd::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) {
        jacobi(k, k + 1) = off_diag[k];
        jacobi(k + 1, k) = off_diag[k];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(jacobi);
    nodes.resize(n);
    weights.resize(n);
    for (int k = 0; k < n; ++k) {
        nodes[k] = es.eigenvalues()[k];
        const double v = es.eigenvectors()(0, k);
        weights[k] = weight_total * v * v;
    }
}

}  // namespace

void gauss_hermite_normal(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 1) throw std::invalid_argument("gauss_hermite_normal: order must be >= 1");
    if (order == 1) {
        nodes = {0.0};
        weights = {1.0};
        return;
    }
    // Physicists' Hermite recurrence has off-diagonal sqrt(k/2); scaling the
    // nodes by sqrt(2) and normalising the total weight to 1 yields the
    // standard-normal rule directly.
    VectorXd off(order - 1);
    for (int k = 1; k < order; ++k) off[k - 1] = std::sqrt(0.5 * k);
    golub_welsch(off, 1.0, nodes, weights);
    for (double& x : nodes) x *= std::sqrt(2.0);
}

void gauss_legendre(int order, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    if (!(b > a)) throw std::invalid_argument("gauss_legendre: need b > a");
    std::vector<double> x, w;
    if (order == 1) {
        x = {0.0};
        w = {2.0};
    } else {
        VectorXd off(order - 1);
        for (int k = 1; k < order; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
        golub_welsch(off, 2.0, x, w);
    }
    nodes.resize(order);
    weights.resize(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int k = 0; k < order; ++k) {
        nodes[k] = mid + half * x[k];
        weights[k] = half * w[k];
    }
}

namespace {

Eigen::LLT<MatrixXd> checked_cholesky(const MatrixXd& sigma, const char* who) {
    if (sigma.rows() != sigma.cols() || sigma.rows() < 1) {
        throw std::invalid_argument(std::string(who) + ": covariance must be square");
    }
    if (!sigma.isApprox(sigma.transpose(), 1e-10)) {
        throw std::invalid_argument(std::string(who) + ": covariance must be symmetric");
    }
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(std::string(who) + ": covariance is not positive definite");
    }
    return llt;
}

}  // namespace

QuadratureRule make_gaussian_rule(int order_per_dim, const MatrixXd& sigma) {
    auto llt = checked_cholesky(sigma, "make_gaussian_rule");
    const int dim = static_cast<int>(sigma.rows());
    if (dim > 3) throw std::invalid_argument("make_gaussian_rule: dimension > 3 unsupported");
    const MatrixXd chol_l = llt.matrixL();

    std::vector<double> x1, w1;
    gauss_hermite_normal(order_per_dim, x1, w1);

    QuadratureRule rule;
    rule.order_per_dim = order_per_dim;
    long count = 1;
    for (int k = 0; k < dim; ++k) count *= order_per_dim;
    rule.nodes.reserve(count);
    std::vector<int> idx(dim, 0);
    VectorXd z(dim);
    for (long flat = 0; flat < count; ++flat) {
        long rem = flat;
        double w = 1.0;
        for (int k = 0; k < dim; ++k) {
            idx[k] = static_cast<int>(rem % order_per_dim);
            rem /= order_per_dim;
            z[k] = x1[idx[k]];
            w *= w1[idx[k]];
        }
        rule.nodes.push_back({chol_l * z, w});
    }
    return rule;
}

int default_gauss_hermite_order(int dim) {
    switch (dim) {
        case 1: return 21;
        case 2: return 15;
        case 3: return 9;
        default: throw std::invalid_argument("gaussian_expectation: dimension must be 1..3");
    }
}

MatrixXd gaussian_expectation_fixed_order(const std::function<MatrixXd(const VectorXd&)>& f,
                                          const MatrixXd& sigma, int order_per_dim) {
    const QuadratureRule rule = make_gaussian_rule(order_per_dim, sigma);
    MatrixXd acc;
    for (const auto& node : rule.nodes) {
        MatrixXd val = f(node.point);
        if (!val.allFinite()) {
            throw std::runtime_error("gaussian_expectation: integrand not finite at a node");
        }
        if (acc.size() == 0) {
            acc = node.weight * val;
        } else {
            acc += node.weight * val;
        }
    }
    return acc;
}

MatrixXd gaussian_expectation(const std::function<MatrixXd(const VectorXd&)>& f,
                              const MatrixXd& sigma, const GaussianExpectationOptions& opts) {
    const int dim = static_cast<int>(sigma.rows());
    int order = opts.initial_order > 0 ? opts.initial_order : default_gauss_hermite_order(dim);

    MatrixXd prev = gaussian_expectation_fixed_order(f, sigma, order);
    double gap = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < opts.max_doublings; ++pass) {
        order *= 2;
        MatrixXd curr = gaussian_expectation_fixed_order(f, sigma, order);
        gap = 0.0;
        for (Eigen::Index j = 0; j < curr.cols(); ++j) {
            for (Eigen::Index i = 0; i < curr.rows(); ++i) {
                const double denom = std::max(1.0, std::abs(curr(i, j)));
                gap = std::max(gap, std::abs(curr(i, j) - prev(i, j)) / denom);
            }
        }
        if (gap < opts.tol) return curr;
        prev = std::move(curr);
    }
    throw QuadratureConvergenceError(
        "gaussian_expectation: no convergence at order " + std::to_string(order) +
            " (gap " + std::to_string(gap) + ", tol " + std::to_string(opts.tol) + ")",
        prev, gap);
}

}  // namespace glmmasym
