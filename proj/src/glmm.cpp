#include "glmmasym/glmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace glmmasym {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// b(eta) without throwing: -inf outside the natural domain so that line
// searches can back off.
double safe_cumulant0(Family family, double eta) {
    if (!eta_in_domain(family, eta)) return kNegInf;
    return cumulant(family, eta, 0);
}

}  // namespace

GroupDerivatives group_derivatives(const Group& group, Family family, const VectorXd& beta,
                                   const VectorXd& u, int dim_random, bool with_third) {
    const int dim_fixed = static_cast<int>(group.x.cols());
    const int dim_b = dim_fixed - dim_random;
    GroupDerivatives out;
    out.score_a = VectorXd::Zero(dim_random);
    out.score_b = VectorXd::Zero(std::max(dim_b, 0));
    out.hess_aa = MatrixXd::Zero(dim_random, dim_random);
    out.hess_ab = MatrixXd::Zero(dim_random, std::max(dim_b, 0));
    out.hess_bb = MatrixXd::Zero(std::max(dim_b, 0), std::max(dim_b, 0));
    if (with_third) {
        out.third_aaa = ThreeArray(dim_random, dim_random, dim_random);
        if (dim_b > 0) out.third_aab = ThreeArray(dim_random, dim_random, dim_b);
    }
    for (Eigen::Index j = 0; j < group.y.size(); ++j) {
        const auto row = group.x.row(j);
        const auto xa = row.head(dim_random);
        const auto xb = row.tail(dim_b);
        const double eta = row.dot(beta) + xa.dot(u);
        const double resid = group.y[j] - cumulant(family, eta, 1);
        const double w2 = cumulant(family, eta, 2);
        out.score_a += resid * xa.transpose();
        if (dim_b > 0) out.score_b += resid * xb.transpose();
        out.hess_aa += w2 * (xa.transpose() * xa);
        if (dim_b > 0) {
            out.hess_ab += w2 * (xa.transpose() * xb);
            out.hess_bb += w2 * (xb.transpose() * xb);
        }
        if (with_third) {
            const double w3 = cumulant(family, eta, 3);
            for (int r = 0; r < dim_random; ++r) {
                for (int s = 0; s < dim_random; ++s) {
                    const double base = w3 * xa[r] * xa[s];
                    for (int t = 0; t < dim_random; ++t) out.third_aaa(r, s, t) += base * xa[t];
                    for (int t = 0; t < dim_b; ++t) out.third_aab(r, s, t) += base * xb[t];
                }
            }
        }
    }
    return out;
}

namespace {

// Group exponent of the marginal-likelihood integrand:
//   (1/phi) sum_j {y_j u^T xA_j - b(eta_j)} - (1/2) u^T Sigma^{-1} u.
double group_exponent(const Group& group, Family family, const VectorXd& beta, const VectorXd& u,
                      const MatrixXd& sigma_inv, double phi) {
    const int dim_random = static_cast<int>(u.size());
    double acc = 0.0;
    for (Eigen::Index j = 0; j < group.y.size(); ++j) {
        const auto row = group.x.row(j);
        const auto xa = row.head(dim_random);
        const double ua = xa.dot(u);
        const double eta = row.dot(beta) + ua;
        const double b = safe_cumulant0(family, eta);
        if (b == kNegInf) return kNegInf;
        acc += group.y[j] * ua - b;
    }
    return acc / phi - 0.5 * u.dot(sigma_inv * u);
}

// Data-only exponent sum_j {y_j u^T xA_j - b(eta_j)} used by the
// unpenalized solve.
double group_data_exponent(const Group& group, Family family, const VectorXd& beta,
                           const VectorXd& u) {
    const int dim_random = static_cast<int>(u.size());
    double acc = 0.0;
    for (Eigen::Index j = 0; j < group.y.size(); ++j) {
        const auto row = group.x.row(j);
        const auto xa = row.head(dim_random);
        const double ua = xa.dot(u);
        const double b = safe_cumulant0(family, row.dot(beta) + ua);
        if (b == kNegInf) return kNegInf;
        acc += group.y[j] * ua - b;
    }
    return acc;
}

// Score and curvature of the data part at u (lean inner-loop variant).
void group_score_hess(const Group& group, Family family, const VectorXd& beta, const VectorXd& u,
                      VectorXd& score, MatrixXd& hess) {
    const int dim_random = static_cast<int>(u.size());
    score.setZero(dim_random);
    hess.setZero(dim_random, dim_random);
    for (Eigen::Index j = 0; j < group.y.size(); ++j) {
        const auto row = group.x.row(j);
        const auto xa = row.head(dim_random);
        const double eta = row.dot(beta) + xa.dot(u);
        score += (group.y[j] - cumulant(family, eta, 1)) * xa.transpose();
        hess += cumulant(family, eta, 2) * (xa.transpose() * xa);
    }
}

}  // namespace

InnerMode inner_mode(const Group& group, Family family, const VectorXd& beta,
                     const MatrixXd& sigma, double phi, const FitOptions& opts,
                     const VectorXd* warm_start) {
    const int dim_random = static_cast<int>(sigma.rows());
    Eigen::LLT<MatrixXd> sigma_llt(sigma);
    if (sigma_llt.info() != Eigen::Success) {
        throw std::invalid_argument("inner_mode: sigma is not positive definite");
    }
    const MatrixXd sigma_inv = sigma_llt.solve(MatrixXd::Identity(dim_random, dim_random));

    VectorXd u = (warm_start && warm_start->size() == dim_random) ? *warm_start
                                                                  : VectorXd::Zero(dim_random);
    double value = group_exponent(group, family, beta, u, sigma_inv, phi);
    if (!std::isfinite(value)) {
        u.setZero();
        value = group_exponent(group, family, beta, u, sigma_inv, phi);
        if (!std::isfinite(value)) {
            throw std::runtime_error("inner_mode: exponent not finite at the origin for group '" +
                                     group.id + "'");
        }
    }

    VectorXd score(dim_random);
    MatrixXd hess(dim_random, dim_random);
    InnerMode out;
    for (int it = 0; it < opts.inner_max_iter; ++it) {
        group_score_hess(group, family, beta, u, score, hess);
        const VectorXd grad = score / phi - sigma_inv * u;
        if (grad.cwiseAbs().maxCoeff() < opts.inner_tol) {
            out.u = u;
            out.hess_aa = hess;
            out.iterations = it;
            return out;
        }
        const MatrixXd curvature = hess / phi + sigma_inv;
        Eigen::LDLT<MatrixXd> ldlt(curvature);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw std::runtime_error("inner_mode: singular curvature for group '" + group.id + "'");
        }
        const VectorXd delta = ldlt.solve(grad);
        double step = 1.0;
        bool moved = false;
        for (int halvings = 0; halvings < 35; ++halvings) {
            const VectorXd cand = u + step * delta;
            const double cand_value = group_exponent(group, family, beta, cand, sigma_inv, phi);
            if (std::isfinite(cand_value) && cand_value >= value - 1e-14 * std::abs(value)) {
                u = cand;
                value = cand_value;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    group_score_hess(group, family, beta, u, score, hess);
    const VectorXd grad = score / phi - sigma_inv * u;
    if (grad.cwiseAbs().maxCoeff() < opts.inner_tol) {
        out.u = u;
        out.hess_aa = hess;
        out.iterations = opts.inner_max_iter;
        return out;
    }
    throw std::runtime_error("inner_mode: no convergence for group '" + group.id +
                             "' (last gradient max " + std::to_string(grad.cwiseAbs().maxCoeff()) +
                             ")");
}

InnerMode unpenalized_mode(const Group& group, Family family, const VectorXd& beta, int dim_random,
                           const FitOptions& opts, const VectorXd* warm_start) {
    VectorXd u = (warm_start && warm_start->size() == dim_random) ? *warm_start
                                                                  : VectorXd::Zero(dim_random);
    double value = group_data_exponent(group, family, beta, u);
    if (!std::isfinite(value)) {
        u.setZero();
        value = group_data_exponent(group, family, beta, u);
        if (!std::isfinite(value)) {
            throw std::runtime_error("unpenalized_mode: exponent not finite at the origin");
        }
    }
    VectorXd score(dim_random);
    MatrixXd hess(dim_random, dim_random);
    InnerMode out;
    for (int it = 0; it < opts.inner_max_iter; ++it) {
        group_score_hess(group, family, beta, u, score, hess);
        if (score.cwiseAbs().maxCoeff() < opts.inner_tol) {
            out.u = u;
            out.hess_aa = hess;
            out.iterations = it;
            return out;
        }
        Eigen::LDLT<MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw std::runtime_error("unpenalized_mode: singular curvature for group '" +
                                     group.id + "'");
        }
        const VectorXd delta = ldlt.solve(score);
        double step = 1.0;
        bool moved = false;
        for (int halvings = 0; halvings < 35; ++halvings) {
            const VectorXd cand = u + step * delta;
            const double cand_value = group_data_exponent(group, family, beta, cand);
            if (std::isfinite(cand_value) && cand_value >= value - 1e-14 * std::abs(value)) {
                u = cand;
                value = cand_value;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    group_score_hess(group, family, beta, u, score, hess);
    if (score.cwiseAbs().maxCoeff() < opts.inner_tol) {
        out.u = u;
        out.hess_aa = hess;
        out.iterations = opts.inner_max_iter;
        return out;
    }
    throw std::runtime_error("unpenalized_mode: no convergence for group '" + group.id +
                             "' (last score max " + std::to_string(score.cwiseAbs().maxCoeff()) +
                             ")");
}

double laplace_quasi_loglik(const GroupedDataset& data, const GlmmSpec& spec, const VectorXd& beta,
                            const MatrixXd& sigma, double phi, const FitOptions& opts,
                            std::vector<VectorXd>* mode_cache) {
    spec.validate();
    if (beta.size() != spec.dim_fixed) {
        throw std::invalid_argument("laplace_quasi_loglik: beta has wrong length");
    }
    if (!beta.allFinite()) throw std::invalid_argument("laplace_quasi_loglik: beta not finite");
    const int dim_random = spec.dim_random;
    Eigen::LLT<MatrixXd> sigma_llt(sigma);
    if (sigma.rows() != dim_random || sigma_llt.info() != Eigen::Success) {
        throw std::invalid_argument("laplace_quasi_loglik: sigma must be SPD d_R x d_R");
    }
    const MatrixXd sigma_inv = sigma_llt.solve(MatrixXd::Identity(dim_random, dim_random));
    double log_det_sigma = 0.0;
    for (int k = 0; k < dim_random; ++k) {
        log_det_sigma += 2.0 * std::log(MatrixXd(sigma_llt.matrixL())(k, k));
    }

    const int m = data.num_groups();
    if (mode_cache && static_cast<int>(mode_cache->size()) != m) {
        mode_cache->assign(m, VectorXd());
    }

    std::vector<double> contributions(m);
    for (int i = 0; i < m; ++i) {
        const Group& g = data.group(i);
        const VectorXd* warm = mode_cache ? &(*mode_cache)[i] : nullptr;
        InnerMode mode = inner_mode(g, spec.family, beta, sigma, phi, opts, warm);
        if (mode_cache) (*mode_cache)[i] = mode.u;

        double data_terms = 0.0;
        for (Eigen::Index j = 0; j < g.y.size(); ++j) {
            const double y = g.y[j];
            data_terms += (y * g.x.row(j).dot(beta) + log_density_c(spec.family, y)) / phi +
                          log_density_d(spec.family, y, phi);
        }
        const MatrixXd curvature = mode.hess_aa / phi + sigma_inv;
        Eigen::LLT<MatrixXd> curv_llt(curvature);
        if (curv_llt.info() != Eigen::Success) {
            throw std::runtime_error("laplace_quasi_loglik: indefinite curvature at the mode");
        }
        double log_det_curv = 0.0;
        for (int k = 0; k < dim_random; ++k) {
            log_det_curv += 2.0 * std::log(MatrixXd(curv_llt.matrixL())(k, k));
        }
        contributions[i] = data_terms +
                           group_exponent(g, spec.family, beta, mode.u, sigma_inv, phi) -
                           0.5 * log_det_curv;
    }
    // Sorted summation keeps the value independent of group order.
    std::sort(contributions.begin(), contributions.end());
    const double total = std::accumulate(contributions.begin(), contributions.end(), 0.0);
    return total - 0.5 * m * (dim_random * std::log(2.0 * M_PI) + log_det_sigma) +
           0.5 * m * dim_random * std::log(2.0 * M_PI);
}

namespace {

struct PackedParams {
    VectorXd beta;
    MatrixXd sigma;
    double phi;
};

PackedParams unpack_theta(const VectorXd& theta, const GlmmSpec& spec, bool profile_phi) {
    PackedParams p;
    p.beta = theta.head(spec.dim_fixed);
    const int q = spec.dim_random * (spec.dim_random + 1) / 2;
    p.sigma = log_cholesky_unpack(theta.segment(spec.dim_fixed, q), spec.dim_random);
    p.phi = profile_phi ? std::exp(theta[theta.size() - 1])
                        : (spec.phi_mode == PhiMode::fixed ? spec.phi_fixed : 1.0);
    return p;
}

double initial_log_phi(const GroupedDataset& data) {
    double mean = 0.0;
    long n = 0;
    for (const auto& g : data.groups()) {
        mean += g.y.sum();
        n += g.y.size();
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& g : data.groups()) var += (g.y.array() - mean).square().sum();
    var /= std::max<long>(n - 1, 1);
    return std::log(std::max(var, 1e-3));
}

}  // namespace

FitResult fit(const GroupedDataset& data, const GlmmSpec& spec, const FitOptions& opts) {
    spec.validate();
    if (data.num_groups() < 2) throw std::invalid_argument("fit: need at least two groups");
    if (data.dim_fixed() != spec.dim_fixed) {
        throw std::invalid_argument("fit: dataset has " + std::to_string(data.dim_fixed()) +
                                    " predictors but the spec declares " +
                                    std::to_string(spec.dim_fixed));
    }
    const bool profile_phi = spec.phi_mode == PhiMode::profile_mle;
    const int q = spec.dim_random * (spec.dim_random + 1) / 2;
    const int n_params = spec.dim_fixed + q + (profile_phi ? 1 : 0);

    VectorXd theta0 = VectorXd::Zero(n_params);
    if (profile_phi) theta0[n_params - 1] = initial_log_phi(data);

    std::vector<VectorXd> mode_cache;
    auto objective = [&](const VectorXd& theta) -> double {
        PackedParams p = unpack_theta(theta, spec, profile_phi);
        try {
            return -laplace_quasi_loglik(data, spec, p.beta, p.sigma, p.phi, opts, &mode_cache);
        } catch (const std::runtime_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    MinimizeOptions mopts;
    mopts.grad_tol = opts.outer_tol;
    mopts.max_iterations = opts.outer_max_iter;
    MinimizeResult mres = minimize_bfgs(objective, theta0, mopts);

    PackedParams p = unpack_theta(mres.x, spec, profile_phi);
    FitResult out;
    out.beta_hat = p.beta;
    out.sigma_hat = p.sigma;
    out.converged = mres.converged;
    out.iterations = mres.iterations;
    out.message = mres.message;
    out.loglik = laplace_quasi_loglik(data, spec, p.beta, p.sigma, p.phi, opts, &mode_cache);
    out.u_star = mode_cache;

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(p.sigma);
    out.sigma_boundary = es.eigenvalues().minCoeff() < 1e-8;

    switch (spec.phi_mode) {
        case PhiMode::fixed:
            out.phi_hat = spec.phi_fixed;
            break;
        case PhiMode::profile_mle:
            out.phi_hat = p.phi;
            break;
        case PhiMode::pearson: {
            const PearsonDispersion pd = pearson_dispersion(data, spec, out);
            out.phi_hat = pd.value;
            out.phi_boundary = pd.zero_boundary;
            break;
        }
    }
    return out;
}

PearsonDispersion pearson_dispersion(const GroupedDataset& data, const GlmmSpec& spec,
                                     const FitResult& fit) {
    if (static_cast<int>(fit.u_star.size()) != data.num_groups()) {
        throw std::invalid_argument("pearson_dispersion: fit lacks conditional modes");
    }
    const long dof = data.total_rows() - spec.dim_fixed;
    if (dof <= 0) throw std::invalid_argument("pearson_dispersion: non-positive degrees of freedom");

    double ss = 0.0;
    for (int i = 0; i < data.num_groups(); ++i) {
        const Group& g = data.group(i);
        const VectorXd& u = fit.u_star[i];
        for (Eigen::Index j = 0; j < g.y.size(); ++j) {
            const auto row = g.x.row(j);
            const double eta = row.dot(fit.beta_hat) + row.head(spec.dim_random).dot(u);
            const double mu = cumulant(spec.family, eta, 1);
            const double v = variance_function(spec.family, mu);
            if (v == 0.0) {
                throw std::runtime_error("pearson_dispersion: zero variance at group '" + g.id +
                                         "' row " + std::to_string(j));
            }
            const double r = g.y[j] - mu;
            ss += r * r / v;
        }
    }
    PearsonDispersion out;
    out.value = ss / static_cast<double>(dof);
    out.zero_boundary = out.value <= 0.0 || out.value < 1e-300;
    return out;
}

VectorXd fit_glm_fixed_effects(const GroupedDataset& data, Family family, double phi,
                               const FitOptions& opts) {
    const int dim_fixed = data.dim_fixed();
    auto objective = [&](const VectorXd& beta) -> double {
        double acc = 0.0;
        for (const auto& g : data.groups()) {
            for (Eigen::Index j = 0; j < g.y.size(); ++j) {
                const double eta = g.x.row(j).dot(beta);
                const double b = safe_cumulant0(family, eta);
                if (b == kNegInf) return std::numeric_limits<double>::infinity();
                acc += (g.y[j] * eta - b) / phi;
            }
        }
        return -acc;
    };
    MinimizeOptions mopts;
    mopts.grad_tol = opts.outer_tol;
    mopts.max_iterations = opts.outer_max_iter;
    MinimizeResult res = minimize_bfgs(objective, VectorXd::Zero(dim_fixed), mopts);
    if (!res.converged) throw std::runtime_error("fit_glm_fixed_effects: no convergence");
    return res.x;
}

}  // namespace glmmasym
