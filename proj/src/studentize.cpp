#include "glmmasym/studentize.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "glmmasym/stats.hpp"

namespace glmmasym {

namespace {

MatrixXd flatten_design(const GroupedDataset& data) {
    MatrixXd rows(data.total_rows(), data.dim_fixed());
    Eigen::Index at = 0;
    for (const auto& g : data.groups()) {
        rows.middleRows(at, g.x.rows()) = g.x;
        at += g.x.rows();
    }
    return rows;
}

}  // namespace

InfoBlocks empirical_info_blocks(const VectorXd& u, const GroupedDataset& data, Family family,
                                 const VectorXd& beta, int dim_random) {
    // info_blocks_from_rows averages over rows, i.e. divides by sum n_i,
    // which equals m * n with n the mean group size.
    return info_blocks_from_rows(flatten_design(data), family, beta, u, dim_random);
}

OmegaBundle empirical_bundle(const GroupedDataset& data, Family family, const VectorXd& beta,
                             const MatrixXd& sigma, double phi) {
    const int dim_random = static_cast<int>(sigma.rows());
    OmegaBundle bundle;
    bundle.dim_a = dim_random;
    bundle.dim_b = data.dim_fixed() - dim_random;
    bundle.beta = beta;
    bundle.sigma = sigma;
    bundle.phi = phi;
    auto rows = std::make_shared<MatrixXd>(flatten_design(data));
    bundle.eval = [rows, family, beta, dim_random](const VectorXd& u) {
        return info_blocks_from_rows(*rows, family, beta, u, dim_random);
    };
    return bundle;
}

MatrixXd e_hat(const OmegaBundle& empirical, EHatQuantity quantity, double tol) {
    GaussianExpectationOptions opts;
    opts.tol = tol;
    const ExpectationMatrices mats = expectation_matrices(empirical, opts);
    switch (quantity) {
        case EHatQuantity::psi6: return mats.e_psi6;
        case EHatQuantity::psi8: return mats.e_psi8;
        case EHatQuantity::psi9: return mats.e_psi9;
        case EHatQuantity::lambda_aa: return mats.lambda_aa;
        case EHatQuantity::lambda_ab: return mats.lambda_ab;
        case EHatQuantity::phi_mat: return mats.phi_mat;
    }
    throw std::logic_error("e_hat: unreachable");
}

StudentizedReport asy_cov_estimates(const GroupedDataset& data, const GlmmSpec& spec,
                                    const FitResult& fit,
                                    const GaussianExpectationOptions& opts) {
    if (!fit.converged) {
        throw std::invalid_argument("asy_cov_estimates: fit did not converge");
    }
    const OmegaBundle bundle =
        empirical_bundle(data, spec.family, fit.beta_hat, fit.sigma_hat, fit.phi_hat);
    const ExpectationMatrices mats = expectation_matrices(bundle, opts);
    const double m = data.num_groups();
    const double n = data.mean_group_size();
    const CovarianceReport cov = assemble_covariances(mats, fit.sigma_hat, fit.phi_hat, m, n);

    StudentizedReport report;
    report.asy_cov_beta = cov.cov_beta_two_term;
    report.asy_cov_vech_sigma = cov.cov_vech_sigma_two_term;
    report.one_term_cov_beta = cov.cov_beta_one_term;
    report.one_term_cov_vech_sigma = cov.cov_vech_sigma_one_term;

    auto check_diagonal = [](const MatrixXd& mat, const char* label) {
        if (mat.diagonal().minCoeff() < 0.0) {
            std::ostringstream msg;
            msg << "asy_cov_estimates: " << label
                << " has a negative diagonal entry (sample too small for the expansion):\n"
                << mat;
            throw std::runtime_error(msg.str());
        }
    };
    check_diagonal(report.asy_cov_beta, "two-term beta covariance");
    check_diagonal(report.asy_cov_vech_sigma, "two-term vech(Sigma) covariance");
    return report;
}

std::vector<std::string> parameter_labels(int dim_fixed, int dim_random) {
    std::vector<std::string> labels;
    for (int k = 0; k < dim_fixed; ++k) labels.push_back("beta_" + std::to_string(k));
    for (int j = 0; j < dim_random; ++j) {
        for (int i = j; i < dim_random; ++i) {
            labels.push_back("sigma_" + std::to_string(i + 1) + std::to_string(j + 1));
        }
    }
    return labels;
}

StudentizedReport confidence_intervals(const GroupedDataset& data, const GlmmSpec& spec,
                                       const FitResult& fit, double alpha,
                                       const GaussianExpectationOptions& opts) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::domain_error("confidence_intervals: alpha must lie in (0,1)");
    }
    StudentizedReport report = asy_cov_estimates(data, spec, fit, opts);
    const double z = normal_quantile(1.0 - 0.5 * alpha);

    const VectorXd vech_sigma = vech(fit.sigma_hat);
    const auto labels = parameter_labels(spec.dim_fixed, spec.dim_random);

    auto push = [&](const std::string& name, double estimate, double variance,
                    const char* method) {
        ParameterInterval ci;
        ci.parameter = name;
        ci.estimate = estimate;
        const double half = z * std::sqrt(std::max(variance, 0.0));
        ci.lower = estimate - half;
        ci.upper = estimate + half;
        ci.method = method;
        ci.alpha = alpha;
        report.intervals.push_back(std::move(ci));
    };

    for (int k = 0; k < spec.dim_fixed; ++k) {
        push(labels[k], fit.beta_hat[k], report.one_term_cov_beta(k, k), "one-term");
        // beta_B variances coincide by construction; reuse the one-term
        // value there so the intervals are identical bit for bit.
        const double var_two = (k < spec.dim_random) ? report.asy_cov_beta(k, k)
                                                     : report.one_term_cov_beta(k, k);
        push(labels[k], fit.beta_hat[k], var_two, "two-term");
    }
    const int q = spec.dim_random * (spec.dim_random + 1) / 2;
    for (int k = 0; k < q; ++k) {
        const std::string& name = labels[spec.dim_fixed + k];
        push(name, vech_sigma[k], report.one_term_cov_vech_sigma(k, k), "one-term");
        push(name, vech_sigma[k], report.asy_cov_vech_sigma(k, k), "two-term");
    }
    return report;
}

}  // namespace glmmasym
