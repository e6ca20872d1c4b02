#ifndef GLMMASYM_SIM_HPP
#define GLMMASYM_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "glmmasym/dataset.hpp"
#include "glmmasym/glmm.hpp"
#include "glmmasym/rng.hpp"

// Coverage experiment over a grid of group counts: data generation for the
// logistic mixed model with uniform predictors, parallel replicate loop
// with keyed random substreams, and byte-stable CSV emission.

namespace glmmasym {

struct SimConfig {
    std::vector<int> m_grid = {100, 150, 200};
    int n_divisor = 10;   // n = m / n_divisor when n_fixed == 0
    int n_fixed = 0;
    int replicates = 200;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    Family family = Family::bernoulli;
    VectorXd beta_true;   // defaults set by make_default()
    MatrixXd sigma_true;
    FitOptions fit_options;
    PhiMode phi_mode = PhiMode::fixed;
    double phi_value = 1.0;
    double quad_tol = 1e-8;
    int threads = 0;      // 0: GLMM_ASYM_THREADS env var, else hardware

    int n_rule(int m) const;
    void validate() const;
    static SimConfig make_default();
};

// Flat `key = value` config text; unknown keys are an error.
SimConfig read_sim_config(const std::string& path);
std::string sim_config_to_text(const SimConfig& config);

// One group-count / parameter / method cell of the experiment.
struct CoverageRecord {
    int m = 0;
    int n = 0;
    std::string parameter;
    std::string method;         // "one-term" | "two-term"
    double coverage = 0.0;
    double std_error = 0.0;     // sqrt(p(1-p)/R)
    int replicates_used = 0;
    int failures = 0;
};

struct CoverageResult {
    std::vector<CoverageRecord> records;
    std::vector<std::string> warnings;  // experiment-level (e.g. >10% failures)
};

// Random intercept-and-slopes design: x = (1, X_1, ..., X_{dF-1}) with
// X_k iid U(0,1); the leading d_R predictors carry N(0, sigma) random
// effects; y follows the family at the canonical link. The draw order is
// fixed, so a given stream state maps to exactly one dataset.
GroupedDataset generate_dataset(int m, int n, const VectorXd& beta_true,
                                const MatrixXd& sigma_true, Family family, SplitRng& rng);

CoverageResult run_coverage(const SimConfig& config);

// coverage.csv, plotdata_<parameter>.csv and manifest.json under out_dir.
// Outputs are byte-identical for identical (config, seed) regardless of
// thread count.
void emit_outputs(const CoverageResult& result, const SimConfig& config,
                  const std::string& out_dir);

std::vector<CoverageRecord> read_coverage_csv(const std::string& path);

}  // namespace glmmasym

#endif
