#include <doctest.h>

#include <cmath>

#include "glmmasym/integrate.hpp"
#include "glmmasym/rng.hpp"

using namespace glmmasym;

TEST_CASE("rule weights are normalised and node count is order^d") {
    MatrixXd sigma(2, 2);
    sigma << 0.56, -0.34, -0.34, 0.89;
    const QuadratureRule rule = make_gaussian_rule(15, sigma);
    CHECK(rule.nodes.size() == 225);
    double total = 0.0;
    for (const auto& node : rule.nodes) {
        CHECK(node.weight > 0.0);
        total += node.weight;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("constant integrand gives one") {
    MatrixXd sigma(2, 2);
    sigma << 1.0, 0.3, 0.3, 2.0;
    const MatrixXd out =
        gaussian_expectation([](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0); }, sigma);
    CHECK(std::abs(out(0, 0) - 1.0) < 1e-12);
}

TEST_CASE("second moment recovers the covariance") {
    MatrixXd sigma(2, 2);
    sigma << 0.56, -0.34, -0.34, 0.89;
    const MatrixXd out = gaussian_expectation(
        [](const VectorXd& u) { return MatrixXd(u * u.transpose()); }, sigma);
    CHECK((out - sigma).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lognormal mean in one dimension") {
    const double s2 = 0.7;
    const MatrixXd sigma = MatrixXd::Constant(1, 1, s2);
    const MatrixXd out = gaussian_expectation(
        [](const VectorXd& u) { return MatrixXd::Constant(1, 1, std::exp(u[0])); }, sigma);
    CHECK(out(0, 0) == doctest::Approx(std::exp(0.5 * s2)).epsilon(1e-8));
}

TEST_CASE("polynomial exactness up to degree 2*order-1") {
    const MatrixXd sigma = MatrixXd::Identity(1, 1);
    // E Z^8 = 105 for a standard normal; order 5 integrates degree <= 9.
    const MatrixXd out = gaussian_expectation_fixed_order(
        [](const VectorXd& u) { return MatrixXd::Constant(1, 1, std::pow(u[0], 8)); }, sigma, 5);
    CHECK(out(0, 0) == doctest::Approx(105.0).epsilon(1e-12));
}

TEST_CASE("affine invariance against the identity-covariance transform") {
    MatrixXd sigma(2, 2);
    sigma << 1.3, 0.4, 0.4, 0.9;
    const Eigen::LLT<MatrixXd> llt(sigma);
    const MatrixXd chol_l = llt.matrixL();
    auto f = [](const VectorXd& u) {
        return MatrixXd::Constant(1, 1, std::sin(u[0]) * std::cos(0.5 * u[1]) + u[0] * u[0]);
    };
    const MatrixXd direct = gaussian_expectation(f, sigma);
    const MatrixXd transformed = gaussian_expectation(
        [&](const VectorXd& z) { return f(chol_l * z); }, MatrixXd::Identity(2, 2));
    CHECK(std::abs(direct(0, 0) - transformed(0, 0)) < 1e-8);
}

TEST_CASE("error drops as the order doubles on a smooth integrand") {
    const MatrixXd sigma = MatrixXd::Constant(1, 1, 1.0);
    auto f = [](const VectorXd& u) { return MatrixXd::Constant(1, 1, std::exp(u[0])); };
    const double truth = std::exp(0.5);
    double prev_err = std::numeric_limits<double>::infinity();
    for (int order : {4, 8, 16}) {
        const double err =
            std::abs(gaussian_expectation_fixed_order(f, sigma, order)(0, 0) - truth);
        CHECK(err <= prev_err * 1.0000001);
        prev_err = err;
    }
}

TEST_CASE("invalid covariance is rejected") {
    MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
    CHECK_THROWS_AS(make_gaussian_rule(5, bad), std::invalid_argument);
    MatrixXd asym(2, 2);
    asym << 1.0, 0.2, 0.0, 1.0;
    CHECK_THROWS_AS(make_gaussian_rule(5, asym), std::invalid_argument);
}

TEST_CASE("non-convergence carries the last estimate") {
    // A needle the default orders cannot resolve at 1e-8.
    const MatrixXd sigma = MatrixXd::Constant(1, 1, 1.0);
    auto needle = [](const VectorXd& u) {
        return MatrixXd::Constant(1, 1, std::cos(300.0 * u[0]));
    };
    GaussianExpectationOptions opts;
    opts.tol = 1e-12;
    opts.initial_order = 3;
    opts.max_doublings = 1;
    CHECK_THROWS_AS(gaussian_expectation(needle, sigma, opts), QuadratureConvergenceError);
    try {
        gaussian_expectation(needle, sigma, opts);
    } catch (const QuadratureConvergenceError& e) {
        CHECK(e.last_estimate.size() == 1);
        CHECK(e.gap > 0.0);
    }
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    std::vector<double> nodes, weights;
    gauss_legendre(6, -1.0, 2.0, nodes, weights);
    double integral = 0.0;
    for (size_t k = 0; k < nodes.size(); ++k) {
        integral += weights[k] * (std::pow(nodes[k], 7) - 2.0 * nodes[k]);
    }
    // int_{-1}^{2} x^7 - 2x dx = (2^8 - 1)/8 - (4 - 1) = 255/8 - 3
    CHECK(integral == doctest::Approx(255.0 / 8.0 - 3.0).epsilon(1e-12));
}
