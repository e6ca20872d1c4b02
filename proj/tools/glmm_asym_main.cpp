// glmm-asym: fit two-level generalized linear mixed models, compute
// second-term-improved studentised confidence intervals, run the coverage
// experiment and the expansion verification suite.

#include <CLI11.hpp>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>

#include "glmmasym/glmm.hpp"
#include "glmmasym/oracle.hpp"
#include "glmmasym/sim.hpp"
#include "glmmasym/studentize.hpp"

namespace {

using namespace glmmasym;

GlmmSpec make_spec(const std::string& family_name_str, int dim_fixed, int dim_random,
                   const std::string& phi_mode_str, double phi_value) {
    const Family family = family_from_name(family_name_str);
    GlmmSpec spec = GlmmSpec::with_defaults(family, dim_fixed, dim_random);
    if (!phi_mode_str.empty()) {
        spec.phi_mode = phi_mode_from_name(phi_mode_str);
        spec.phi_fixed = phi_value;
    }
    spec.validate();
    return spec;
}

void print_fit(const FitResult& result, const GlmmSpec& spec) {
    std::cout << std::setprecision(10);
    std::cout << "converged: " << (result.converged ? "yes" : "no") << " (" << result.message
              << ", " << result.iterations << " iterations)\n";
    std::cout << "log-likelihood (Laplace): " << result.loglik << "\n";
    for (Eigen::Index k = 0; k < result.beta_hat.size(); ++k) {
        std::cout << "beta_" << k << " = " << result.beta_hat[k] << "\n";
    }
    const VectorXd sv = vech(result.sigma_hat);
    const auto labels = parameter_labels(spec.dim_fixed, spec.dim_random);
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        std::cout << labels[spec.dim_fixed + k] << " = " << sv[k] << "\n";
    }
    std::cout << "phi (" << phi_mode_name(spec.phi_mode) << ") = " << result.phi_hat << "\n";
    if (result.sigma_boundary) {
        std::cout << "warning: sigma estimate is near the boundary (smallest eigenvalue < 1e-8)\n";
    }
    if (result.phi_boundary) std::cout << "warning: Pearson dispersion at the zero boundary\n";
}

int run_fit(const std::string& data_path, const std::string& family_str, int dim_random,
            const std::string& phi_mode_str, double phi_value, double tol) {
    const GroupedDataset data = read_dataset_csv(data_path);
    GlmmSpec spec = make_spec(family_str, data.dim_fixed(), dim_random, phi_mode_str, phi_value);
    FitOptions opts;
    opts.outer_tol = tol;
    const FitResult result = fit(data, spec, opts);
    print_fit(result, spec);
    return result.converged ? 0 : 1;
}

int run_ci(const std::string& data_path, const std::string& family_str, int dim_random,
           const std::string& phi_mode_str, double phi_value, double alpha,
           const std::string& method) {
    const GroupedDataset data = read_dataset_csv(data_path);
    GlmmSpec spec = make_spec(family_str, data.dim_fixed(), dim_random, phi_mode_str, phi_value);
    const FitResult result = fit(data, spec);
    if (!result.converged) {
        std::cerr << "fit did not converge: " << result.message << "\n";
        return 1;
    }
    const StudentizedReport report = confidence_intervals(data, spec, result, alpha);

    const auto labels = parameter_labels(spec.dim_fixed, spec.dim_random);
    struct RowOut {
        double estimate = 0.0;
        double se[2] = {0.0, 0.0};
        double lo[2] = {0.0, 0.0}, hi[2] = {0.0, 0.0};
    };
    std::map<std::string, RowOut> rows;
    for (size_t p = 0; p < labels.size(); ++p) {
        RowOut row;
        if (p < static_cast<size_t>(spec.dim_fixed)) {
            row.se[0] = std::sqrt(report.one_term_cov_beta(p, p));
            row.se[1] = std::sqrt(report.asy_cov_beta(p, p));
        } else {
            const size_t k = p - spec.dim_fixed;
            row.se[0] = std::sqrt(report.one_term_cov_vech_sigma(k, k));
            row.se[1] = std::sqrt(report.asy_cov_vech_sigma(k, k));
        }
        rows[labels[p]] = row;
    }
    for (const auto& ci : report.intervals) {
        auto& row = rows[ci.parameter];
        row.estimate = ci.estimate;
        const int idx = ci.method == "one-term" ? 0 : 1;
        row.lo[idx] = ci.lower;
        row.hi[idx] = ci.upper;
    }

    std::cout << "parameter,estimate,se_one_term,se_two_term,lo_1t,hi_1t,lo_2t,hi_2t\n";
    std::cout << std::setprecision(10);
    const bool both = method == "both";
    for (const auto& name : labels) {
        const auto& row = rows[name];
        std::cout << name << ',' << row.estimate << ',' << row.se[0] << ',' << row.se[1] << ',';
        if (both || method == "one") {
            std::cout << row.lo[0] << ',' << row.hi[0] << ',';
        } else {
            std::cout << ",,";
        }
        if (both || method == "two") {
            std::cout << row.lo[1] << ',' << row.hi[1];
        } else {
            std::cout << ',';
        }
        std::cout << "\n";
    }
    return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
    const SimConfig config =
        config_path.empty() ? SimConfig::make_default() : read_sim_config(config_path);
    const CoverageResult result = run_coverage(config);
    emit_outputs(result, config, out_dir);
    for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
    std::cout << "wrote " << result.records.size() << " coverage records to " << out_dir << "\n";
    return result.warnings.empty() ? 0 : 1;
}

int run_verify(const std::string& suite) {
    const auto rows = run_verification_suite(suite);
    bool all_pass = true;
    for (const auto& row : rows) {
        std::cout << (row.pass ? "[PASS] " : "[FAIL] ") << row.name << ": " << row.details << "\n";
        all_pass = all_pass && row.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-level GLMM fitting with second-term-improved asymptotic covariances"};
    app.require_subcommand(1);

    std::string data_path, family_str = "bernoulli", phi_mode_str;
    std::string config_path, out_dir = "out", suite = "all", method = "both";
    int dim_random = 1;
    double phi_value = 1.0, alpha = 0.05, tol = 1e-6;

    auto* fit_cmd = app.add_subcommand("fit", "maximum quasi-likelihood fit");
    fit_cmd->add_option("--data", data_path, "dataset csv (group,y,x1,...)")->required();
    fit_cmd->add_option("--family", family_str, "gaussian|bernoulli|poisson|gamma");
    fit_cmd->add_option("--d-r", dim_random, "number of random-effect predictors")->required();
    fit_cmd->add_option("--phi", phi_mode_str, "fixed|pearson|profile-mle");
    fit_cmd->add_option("--phi-value", phi_value, "dispersion when --phi fixed");
    fit_cmd->add_option("--tol", tol, "outer gradient tolerance");

    auto* ci_cmd = app.add_subcommand("ci", "studentised confidence intervals");
    ci_cmd->add_option("--data", data_path, "dataset csv")->required();
    ci_cmd->add_option("--family", family_str, "gaussian|bernoulli|poisson|gamma");
    ci_cmd->add_option("--d-r", dim_random, "number of random-effect predictors")->required();
    ci_cmd->add_option("--phi", phi_mode_str, "fixed|pearson|profile-mle");
    ci_cmd->add_option("--phi-value", phi_value, "dispersion when --phi fixed");
    ci_cmd->add_option("--alpha", alpha, "level (default 0.05)");
    ci_cmd->add_option("--method", method, "one|two|both");

    auto* sim_cmd = app.add_subcommand("simulate", "coverage experiment");
    sim_cmd->add_option("--config", config_path, "flat key=value config file");
    sim_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* verify_cmd = app.add_subcommand("verify", "expansion verification suite");
    verify_cmd->add_option("--suite", suite, "matrix|miyata|ustar|scores|all");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(fit_cmd)) {
            return run_fit(data_path, family_str, dim_random, phi_mode_str, phi_value, tol);
        }
        if (app.got_subcommand(ci_cmd)) {
            return run_ci(data_path, family_str, dim_random, phi_mode_str, phi_value, alpha,
                          method);
        }
        if (app.got_subcommand(sim_cmd)) return run_simulate(config_path, out_dir);
        if (app.got_subcommand(verify_cmd)) return run_verify(suite);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
