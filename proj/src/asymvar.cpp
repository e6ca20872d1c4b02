#include "glmmasym/asymvar.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace glmmasym {

InfoBlocks info_blocks_from_rows(const MatrixXd& x_rows, Family family, const VectorXd& beta,
                                 const VectorXd& u, int dim_random) {
    const int dim_fixed = static_cast<int>(x_rows.cols());
    const int dim_b = dim_fixed - dim_random;
    InfoBlocks out;
    out.aa = MatrixXd::Zero(dim_random, dim_random);
    out.ab = MatrixXd::Zero(dim_random, dim_b);
    out.bb = MatrixXd::Zero(dim_b, dim_b);
    out.aaa = ThreeArray(dim_random, dim_random, dim_random);
    if (dim_b > 0) out.aab = ThreeArray(dim_random, dim_random, dim_b);
    for (Eigen::Index j = 0; j < x_rows.rows(); ++j) {
        const auto row = x_rows.row(j);
        const auto xa = row.head(dim_random);
        const auto xb = row.tail(dim_b);
        const double eta = row.dot(beta) + xa.dot(u);
        const double w2 = cumulant(family, eta, 2);
        const double w3 = cumulant(family, eta, 3);
        out.aa += w2 * (xa.transpose() * xa);
        if (dim_b > 0) {
            out.ab += w2 * (xa.transpose() * xb);
            out.bb += w2 * (xb.transpose() * xb);
        }
        for (int r = 0; r < dim_random; ++r) {
            for (int s = 0; s < dim_random; ++s) {
                const double base = w3 * xa[r] * xa[s];
                for (int t = 0; t < dim_random; ++t) out.aaa(r, s, t) += base * xa[t];
                for (int t = 0; t < dim_b; ++t) out.aab(r, s, t) += base * xb[t];
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(x_rows.rows());
    out.aa *= inv_n;
    out.ab *= inv_n;
    out.bb *= inv_n;
    out.aaa *= inv_n;
    if (dim_b > 0) out.aab *= inv_n;
    return out;
}

OmegaBundle population_bundle(const PopulationModel& model) {
    if (model.dim_random < 1) throw std::invalid_argument("population_bundle: d_R must be >= 1");
    if (model.beta0.size() < model.dim_random) {
        throw std::invalid_argument("population_bundle: beta shorter than d_R");
    }
    OmegaBundle bundle;
    bundle.dim_a = model.dim_random;
    bundle.dim_b = static_cast<int>(model.beta0.size()) - model.dim_random;
    bundle.beta = model.beta0;
    bundle.sigma = model.sigma0;
    bundle.phi = model.phi;

    if (model.exact_blocks) {
        bundle.eval = model.exact_blocks;
        return bundle;
    }
    if (!model.x_sampler) {
        throw std::invalid_argument("population_bundle: needs an X sampler or exact blocks");
    }
    // Draw the X design once; every evaluation then shares the same fixed
    // empirical X distribution.
    auto draws = std::make_shared<MatrixXd>(model.mc_draws, model.beta0.size());
    SplitRng rng(model.mc_seed, 0x584d43ULL);  // dedicated moment-sampling stream
    for (long i = 0; i < model.mc_draws; ++i) {
        const VectorXd x = model.x_sampler(rng);
        if (x.size() != model.beta0.size()) {
            throw std::invalid_argument("population_bundle: sampler returned wrong dimension");
        }
        draws->row(i) = x.transpose();
    }
    const Family family = model.family;
    const VectorXd beta = model.beta0;
    const int dim_random = model.dim_random;
    bundle.eval = [draws, family, beta, dim_random](const VectorXd& u) {
        return info_blocks_from_rows(*draws, family, beta, u, dim_random);
    };
    return bundle;
}

OmegaBundle gaussian_exact_bundle(const VectorXd& beta, const MatrixXd& sigma, double phi,
                                  const MatrixXd& second_moment_xx, int dim_random) {
    const int dim_fixed = static_cast<int>(second_moment_xx.rows());
    const int dim_b = dim_fixed - dim_random;
    InfoBlocks blocks;
    blocks.aa = second_moment_xx.topLeftCorner(dim_random, dim_random);
    blocks.ab = second_moment_xx.topRightCorner(dim_random, dim_b);
    blocks.bb = second_moment_xx.bottomRightCorner(dim_b, dim_b);
    blocks.aaa = ThreeArray(dim_random, dim_random, dim_random);
    if (dim_b > 0) blocks.aab = ThreeArray(dim_random, dim_random, dim_b);

    OmegaBundle bundle;
    bundle.dim_a = dim_random;
    bundle.dim_b = dim_b;
    bundle.beta = beta;
    bundle.sigma = sigma;
    bundle.phi = phi;
    bundle.eval = [blocks](const VectorXd&) { return blocks; };
    return bundle;
}

OmegaBundle poisson_scalar_bundle(double beta0, double beta1, double sigma2, double phi,
                                  double moment0, double moment1, double moment2) {
    OmegaBundle bundle;
    bundle.dim_a = 1;
    bundle.dim_b = 1;
    bundle.beta = (VectorXd(2) << beta0, beta1).finished();
    bundle.sigma = MatrixXd::Constant(1, 1, sigma2);
    bundle.phi = phi;
    bundle.eval = [beta0, moment0, moment1, moment2](const VectorXd& u) {
        const double scale = std::exp(beta0 + u[0]);
        InfoBlocks blocks;
        blocks.aa = MatrixXd::Constant(1, 1, scale * moment0);
        blocks.ab = MatrixXd::Constant(1, 1, scale * moment1);
        blocks.bb = MatrixXd::Constant(1, 1, scale * moment2);
        blocks.aaa = ThreeArray(1, 1, 1);
        blocks.aaa(0, 0, 0) = scale * moment0;
        blocks.aab = ThreeArray(1, 1, 1);
        blocks.aab(0, 0, 0) = scale * moment1;
        return blocks;
    };
    return bundle;
}

namespace {

MatrixXd solve_spd(const MatrixXd& a, const MatrixXd& rhs, const char* who) {
    Eigen::LDLT<MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw std::runtime_error(std::string(who) + ": matrix not positive definite");
    }
    return ldlt.solve(rhs);
}

double condition_estimate(const MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
    const double lo = es.eigenvalues().cwiseAbs().minCoeff();
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

PsiVectors psi_vectors(const VectorXd& u, const MatrixXd& sigma, const InfoBlocks& blocks) {
    const int dim_a = static_cast<int>(blocks.aa.rows());
    const MatrixXd aa_inv =
        solve_spd(blocks.aa, MatrixXd::Identity(dim_a, dim_a), "psi_vectors (info aa)");
    const MatrixXd sigma_inv =
        solve_spd(sigma, MatrixXd::Identity(dim_a, dim_a), "psi_vectors (sigma)");
    const MatrixXd defect = sigma - u * u.transpose();

    PsiVectors out;
    out.psi1 = vech(defect);
    out.psi2 = star(blocks.aaa, aa_inv);
    out.psi3 = (blocks.ab.cols() > 0) ? star(blocks.aab, aa_inv) : VectorXd(0);
    const MatrixXd inner = defect - sigma * out.psi2 * u.transpose();
    out.psi4 = duplication_pinv(dim_a) * vec(aa_inv * sigma_inv * inner);
    return out;
}

PsiMatrices psi_matrices(const VectorXd& u, const MatrixXd& sigma, const InfoBlocks& blocks) {
    const int dim_a = static_cast<int>(blocks.aa.rows());
    const MatrixXd aa_inv =
        solve_spd(blocks.aa, MatrixXd::Identity(dim_a, dim_a), "psi_matrices (info aa)");
    const MatrixXd sigma_inv =
        solve_spd(sigma, MatrixXd::Identity(dim_a, dim_a), "psi_matrices (sigma)");
    const MatrixXd dup_pinv = duplication_pinv(dim_a);

    PsiMatrices out;
    out.psi5 = aa_inv * blocks.ab;
    out.psi6 = blocks.bb - out.psi5.transpose() * blocks.ab;
    out.psi7 = u * u.transpose() * sigma_inv * aa_inv;
    out.psi8 = dup_pinv * kronecker(u * u.transpose(), aa_inv) * dup_pinv.transpose();
    const PsiVectors vecs = psi_vectors(u, sigma, blocks);
    out.psi9 = vecs.psi1 * vecs.psi4.transpose() + vecs.psi4 * vecs.psi1.transpose();
    return out;
}

namespace {

// Flat packing of all expectation integrands so a single quadrature pass
// produces every block with one set of bundle evaluations.
struct PackLayout {
    int dim_a, dim_b, q;
    int len_lambda_aa, len_lambda_ab, len_phi, len_psi6, len_psi8, len_psi9;
    int total;
    explicit PackLayout(int a, int b) : dim_a(a), dim_b(b), q(a * (a + 1) / 2) {
        len_lambda_aa = a * a;
        len_lambda_ab = a * b;
        len_phi = b * q;
        len_psi6 = b * b;
        len_psi8 = q * q;
        len_psi9 = q * q;
        total = len_lambda_aa + len_lambda_ab + len_phi + len_psi6 + len_psi8 + len_psi9;
    }
};

void pack_block(VectorXd& out, int& offset, const MatrixXd& block) {
    for (Eigen::Index j = 0; j < block.cols(); ++j)
        for (Eigen::Index i = 0; i < block.rows(); ++i) out[offset++] = block(i, j);
}

MatrixXd unpack_block(const VectorXd& flat, int& offset, int rows, int cols) {
    MatrixXd out(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) out(i, j) = flat[offset++];
    return out;
}

}  // namespace

ExpectationMatrices expectation_matrices(const OmegaBundle& bundle,
                                         const GaussianExpectationOptions& opts) {
    const int dim_a = bundle.dim_a;
    const int dim_b = bundle.dim_b;
    const PackLayout layout(dim_a, dim_b);
    const MatrixXd sigma_inv = solve_spd(bundle.sigma, MatrixXd::Identity(dim_a, dim_a),
                                         "expectation_matrices (sigma)");

    auto integrand = [&](const VectorXd& u) -> MatrixXd {
        const InfoBlocks blocks = bundle.eval(u);
        const MatrixXd aa_inv = solve_spd(blocks.aa, MatrixXd::Identity(dim_a, dim_a),
                                          "expectation_matrices (info aa at a node)");
        const PsiVectors vecs = psi_vectors(u, bundle.sigma, blocks);

        const MatrixXd psi5 = aa_inv * blocks.ab;
        const MatrixXd psi6 = blocks.bb - psi5.transpose() * blocks.ab;
        const MatrixXd psi7 = u * u.transpose() * sigma_inv * aa_inv;
        const MatrixXd dup_pinv = duplication_pinv(dim_a);
        const MatrixXd psi8 =
            dup_pinv * kronecker(u * u.transpose(), aa_inv) * dup_pinv.transpose();
        const MatrixXd psi9 =
            vecs.psi1 * vecs.psi4.transpose() + vecs.psi4 * vecs.psi1.transpose();

        const MatrixXd lambda_aa_term = psi7 + psi7.transpose() - aa_inv +
                                        aa_inv * vecs.psi2 * u.transpose() +
                                        u * vecs.psi2.transpose() * aa_inv;
        MatrixXd lambda_ab_term(dim_a, dim_b);
        MatrixXd phi_term(dim_b, layout.q);
        if (dim_b > 0) {
            lambda_ab_term = u * u.transpose() * sigma_inv * psi5 +
                             u * vecs.psi2.transpose() * psi5 - u * vecs.psi3.transpose();
            phi_term = (psi5.transpose() * (sigma_inv * u + vecs.psi2) - vecs.psi3) *
                       vecs.psi1.transpose();
        }

        VectorXd flat(layout.total);
        int offset = 0;
        pack_block(flat, offset, lambda_aa_term);
        pack_block(flat, offset, lambda_ab_term);
        pack_block(flat, offset, phi_term);
        pack_block(flat, offset, psi6);
        pack_block(flat, offset, psi8);
        pack_block(flat, offset, psi9);
        return flat;
    };

    const MatrixXd flat = gaussian_expectation(integrand, bundle.sigma, opts);
    int offset = 0;
    ExpectationMatrices out;
    const VectorXd col = flat.col(0);
    out.lambda_aa = unpack_block(col, offset, dim_a, dim_a);
    out.lambda_ab = unpack_block(col, offset, dim_a, dim_b);
    out.phi_mat = unpack_block(col, offset, dim_b, layout.q);
    out.e_psi6 = unpack_block(col, offset, dim_b, dim_b);
    out.e_psi8 = unpack_block(col, offset, layout.q, layout.q);
    out.e_psi9 = unpack_block(col, offset, layout.q, layout.q);

    const double asym = (out.lambda_aa - out.lambda_aa.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8) {
        throw std::runtime_error("expectation_matrices: lambda_aa asymmetry " +
                                 std::to_string(asym) + " exceeds 1e-8");
    }
    out.lambda_aa = 0.5 * (out.lambda_aa + out.lambda_aa.transpose());
    return out;
}

CovarianceReport assemble_covariances(const ExpectationMatrices& exp_mats, const MatrixXd& sigma,
                                      double phi, double m, double n) {
    if (!(m > 0.0) || !(n > 0.0)) {
        throw std::invalid_argument("assemble_covariances: m and n must be positive");
    }
    const int dim_a = static_cast<int>(exp_mats.lambda_aa.rows());
    const int dim_b = static_cast<int>(exp_mats.e_psi6.rows());
    const int dim_f = dim_a + dim_b;
    const double second_scale = phi / (m * n);

    const double cond_lambda = condition_estimate(exp_mats.lambda_aa);
    if (!(cond_lambda < 1e10)) {
        throw std::runtime_error("assemble_covariances: lambda_aa condition estimate " +
                                 std::to_string(cond_lambda));
    }

    CovarianceReport report;
    report.m = m;
    report.n = n;

    MatrixXd psi6_inv(dim_b, dim_b);
    if (dim_b > 0) {
        const double cond_psi6 = condition_estimate(exp_mats.e_psi6);
        if (!(cond_psi6 < 1e10)) {
            throw std::runtime_error("assemble_covariances: E{psi6} condition estimate " +
                                     std::to_string(cond_psi6));
        }
        psi6_inv = solve_spd(exp_mats.e_psi6, MatrixXd::Identity(dim_b, dim_b),
                             "assemble_covariances (E{psi6})");
        psi6_inv = 0.5 * (psi6_inv + psi6_inv.transpose());
    }

    // Bracket inverse through its Schur blocks: the beta_B block is exactly
    // the inverse of E{psi6}, shared with the one-term construction.
    MatrixXd bracket_inv(dim_f, dim_f);
    if (dim_b > 0) {
        const MatrixXd cross = exp_mats.lambda_ab * psi6_inv;
        bracket_inv.topLeftCorner(dim_a, dim_a) =
            exp_mats.lambda_aa + cross * exp_mats.lambda_ab.transpose();
        bracket_inv.topRightCorner(dim_a, dim_b) = -cross;
        bracket_inv.bottomLeftCorner(dim_b, dim_a) = -cross.transpose();
        bracket_inv.bottomRightCorner(dim_b, dim_b) = psi6_inv;
    } else {
        bracket_inv = exp_mats.lambda_aa;
    }

    MatrixXd first_beta = MatrixXd::Zero(dim_f, dim_f);
    first_beta.topLeftCorner(dim_a, dim_a) = sigma / m;

    report.cov_beta_two_term = first_beta + second_scale * bracket_inv;
    report.cov_beta_one_term = first_beta;
    if (dim_b > 0) {
        report.cov_beta_one_term.bottomRightCorner(dim_b, dim_b) = second_scale * psi6_inv;
    }

    const MatrixXd dup_pinv = duplication_pinv(dim_a);
    const MatrixXd vech_first =
        (2.0 / m) * dup_pinv * kronecker(sigma, sigma) * dup_pinv.transpose();
    MatrixXd vech_second = 2.0 * (exp_mats.e_psi9 - 2.0 * exp_mats.e_psi8);
    if (dim_b > 0) {
        vech_second += exp_mats.phi_mat.transpose() * psi6_inv * exp_mats.phi_mat;
    }
    report.cov_vech_sigma_one_term = vech_first;
    report.cov_vech_sigma_two_term = vech_first + second_scale * vech_second;

    auto symmetrise = [](MatrixXd& mat) { mat = 0.5 * (mat + mat.transpose()).eval(); };
    symmetrise(report.cov_beta_one_term);
    symmetrise(report.cov_beta_two_term);
    symmetrise(report.cov_vech_sigma_one_term);
    symmetrise(report.cov_vech_sigma_two_term);
    return report;
}

CovarianceReport two_term_covariances(const OmegaBundle& bundle, double m, double n,
                                      const GaussianExpectationOptions& opts) {
    const ExpectationMatrices exp_mats = expectation_matrices(bundle, opts);
    return assemble_covariances(exp_mats, bundle.sigma, bundle.phi, m, n);
}

CovarianceReport gaussian_closed_form(const MatrixXd& sigma0, double phi,
                                      const MatrixXd& second_moment_xx, int dim_random, double m,
                                      double n) {
    const int dim_f = static_cast<int>(second_moment_xx.rows());
    CovarianceReport report;
    report.m = m;
    report.n = n;

    MatrixXd first_beta = MatrixXd::Zero(dim_f, dim_f);
    first_beta.topLeftCorner(dim_random, dim_random) = sigma0 / m;
    const MatrixXd xx_inv = solve_spd(second_moment_xx, MatrixXd::Identity(dim_f, dim_f),
                                      "gaussian_closed_form (E{XX^T})");
    report.cov_beta_two_term = first_beta + (phi / (m * n)) * xx_inv;

    const int dim_b = dim_f - dim_random;
    report.cov_beta_one_term = first_beta;
    if (dim_b > 0) {
        const MatrixXd waa = second_moment_xx.topLeftCorner(dim_random, dim_random);
        const MatrixXd wab = second_moment_xx.topRightCorner(dim_random, dim_b);
        const MatrixXd wbb = second_moment_xx.bottomRightCorner(dim_b, dim_b);
        const MatrixXd schur = wbb - wab.transpose() * solve_spd(waa, wab, "gaussian_closed_form");
        report.cov_beta_one_term.bottomRightCorner(dim_b, dim_b) =
            (phi / (m * n)) *
            solve_spd(schur, MatrixXd::Identity(dim_b, dim_b), "gaussian_closed_form (schur)");
    }

    const MatrixXd dup_pinv = duplication_pinv(dim_random);
    const MatrixXd waa = second_moment_xx.topLeftCorner(dim_random, dim_random);
    const MatrixXd waa_inv =
        solve_spd(waa, MatrixXd::Identity(dim_random, dim_random), "gaussian_closed_form (aa)");
    report.cov_vech_sigma_one_term =
        (2.0 / m) * dup_pinv * kronecker(sigma0, sigma0) * dup_pinv.transpose();
    report.cov_vech_sigma_two_term =
        report.cov_vech_sigma_one_term +
        (4.0 * phi / (m * n)) * dup_pinv * kronecker(sigma0, waa_inv) * dup_pinv.transpose();
    return report;
}

MatrixXd poisson_closed_form(double beta0, double beta1, double sigma2, double phi, double moment0,
                             double moment1, double moment2, double m, double n) {
    (void)beta1;
    const double spread = moment2 * moment0 - moment1 * moment1;
    const double a1 = std::exp(beta0 + 0.5 * sigma2) * spread;
    const double scale = std::max({moment0, std::abs(moment1), moment2});
    if (!(a1 > 1e-12 * scale * scale)) {
        throw std::runtime_error("poisson_closed_form: degenerate X distribution (a1 = " +
                                 std::to_string(a1) + ")");
    }
    const double a2 =
        (std::exp(sigma2) * moment2 * moment0 + (1.0 - std::exp(sigma2)) * moment1 * moment1) /
        moment0;

    MatrixXd cov(2, 2);
    cov << sigma2 / m, 0.0, 0.0, 0.0;
    MatrixXd second(2, 2);
    second << a2, -moment1, -moment1, moment0;
    cov += (phi / (a1 * m * n)) * second;
    return cov;
}

}  // namespace glmmasym
