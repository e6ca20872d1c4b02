#include "glmmasym/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "glmmasym/parallel.hpp"
#include "glmmasym/studentize.hpp"

namespace glmmasym {

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace

int SimConfig::n_rule(int m) const {
    if (n_fixed > 0) return n_fixed;
    return m / n_divisor;
}

void SimConfig::validate() const {
    if (m_grid.empty()) throw std::invalid_argument("sim config: m_grid is empty");
    for (int m : m_grid) {
        if (m < 2) throw std::invalid_argument("sim config: every m must be >= 2");
        if (n_rule(m) < 2) throw std::invalid_argument("sim config: n_rule(m) must be >= 2");
    }
    if (replicates < 1) throw std::invalid_argument("sim config: replicates must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("sim config: alpha in (0,1)");
    if (beta_true.size() < 1) throw std::invalid_argument("sim config: beta_true is empty");
    if (sigma_true.rows() < 1 || sigma_true.rows() != sigma_true.cols()) {
        throw std::invalid_argument("sim config: sigma_true must be square");
    }
    if (sigma_true.rows() > beta_true.size()) {
        throw std::invalid_argument("sim config: d_R exceeds d_F");
    }
    Eigen::LLT<MatrixXd> llt(sigma_true);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("sim config: sigma_true is not positive definite");
    }
}

SimConfig SimConfig::make_default() {
    SimConfig config;
    config.beta_true = (VectorXd(5) << 0.35, 0.96, -0.47, 1.06, -1.31).finished();
    config.sigma_true = (MatrixXd(2, 2) << 0.56, -0.34, -0.34, 0.89).finished();
    return config;
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::invalid_argument("sim config: bad number '" + item + "' for " + key);
        }
    }
    if (out.empty()) throw std::invalid_argument("sim config: empty list for " + key);
    return out;
}

MatrixXd sigma_from_vech_list(const std::vector<double>& entries) {
    VectorXd v(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) v[static_cast<Eigen::Index>(i)] = entries[i];
    return vech_inv(v);
}

}  // namespace

SimConfig read_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    SimConfig config = SimConfig::make_default();

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "m_grid") {
                config.m_grid.clear();
                for (double v : parse_double_list(value, key)) {
                    config.m_grid.push_back(static_cast<int>(v));
                }
            } else if (key == "n_rule") {
                // accepted form: m/<divisor>
                if (value.rfind("m/", 0) != 0) {
                    throw std::invalid_argument("n_rule must look like m/10");
                }
                config.n_divisor = std::stoi(value.substr(2));
                config.n_fixed = 0;
            } else if (key == "n_fixed") {
                config.n_fixed = std::stoi(value);
            } else if (key == "replicates") {
                config.replicates = std::stoi(value);
            } else if (key == "seed") {
                config.seed = std::stoull(value);
            } else if (key == "alpha") {
                config.alpha = std::stod(value);
            } else if (key == "family") {
                config.family = family_from_name(value);
            } else if (key == "beta_true") {
                const auto list = parse_double_list(value, key);
                config.beta_true.resize(static_cast<Eigen::Index>(list.size()));
                for (size_t i = 0; i < list.size(); ++i) {
                    config.beta_true[static_cast<Eigen::Index>(i)] = list[i];
                }
            } else if (key == "sigma_true") {
                config.sigma_true = sigma_from_vech_list(parse_double_list(value, key));
            } else if (key == "optimizer.tol") {
                config.fit_options.outer_tol = std::stod(value);
            } else if (key == "optimizer.max_iter") {
                config.fit_options.outer_max_iter = std::stoi(value);
            } else if (key == "inner.tol") {
                config.fit_options.inner_tol = std::stod(value);
            } else if (key == "inner.max_iter") {
                config.fit_options.inner_max_iter = std::stoi(value);
            } else if (key == "phi.mode") {
                config.phi_mode = phi_mode_from_name(value);
            } else if (key == "phi.value") {
                config.phi_value = std::stod(value);
            } else if (key == "quad_tol") {
                config.quad_tol = std::stod(value);
            } else if (key == "threads") {
                config.threads = std::stoi(value);
            } else {
                throw std::invalid_argument("unknown config key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " +
                                        e.what());
        }
    }
    config.validate();
    return config;
}

std::string sim_config_to_text(const SimConfig& config) {
    std::ostringstream os;
    os.precision(17);
    os << "m_grid = ";
    for (size_t i = 0; i < config.m_grid.size(); ++i) {
        if (i) os << ",";
        os << config.m_grid[i];
    }
    os << "\n";
    if (config.n_fixed > 0) {
        os << "n_fixed = " << config.n_fixed << "\n";
    } else {
        os << "n_rule = m/" << config.n_divisor << "\n";
    }
    os << "replicates = " << config.replicates << "\n";
    os << "seed = " << config.seed << "\n";
    os << "alpha = " << config.alpha << "\n";
    os << "family = " << family_name(config.family) << "\n";
    os << "beta_true = ";
    for (Eigen::Index i = 0; i < config.beta_true.size(); ++i) {
        if (i) os << ",";
        os << config.beta_true[i];
    }
    os << "\n";
    const VectorXd sv = vech(config.sigma_true);
    os << "sigma_true = ";
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (i) os << ",";
        os << sv[i];
    }
    os << "\n";
    os << "optimizer.tol = " << config.fit_options.outer_tol << "\n";
    os << "optimizer.max_iter = " << config.fit_options.outer_max_iter << "\n";
    os << "inner.tol = " << config.fit_options.inner_tol << "\n";
    os << "inner.max_iter = " << config.fit_options.inner_max_iter << "\n";
    os << "phi.mode = " << phi_mode_name(config.phi_mode) << "\n";
    os << "phi.value = " << config.phi_value << "\n";
    os << "quad_tol = " << config.quad_tol << "\n";
    return os.str();
}

GroupedDataset generate_dataset(int m, int n, const VectorXd& beta_true,
                                const MatrixXd& sigma_true, Family family, SplitRng& rng) {
    const int dim_fixed = static_cast<int>(beta_true.size());
    const int dim_random = static_cast<int>(sigma_true.rows());
    Eigen::LLT<MatrixXd> llt(sigma_true);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("generate_dataset: sigma_true not positive definite");
    }
    const MatrixXd chol_l = llt.matrixL();

    std::vector<Group> groups;
    groups.reserve(m);
    for (int i = 0; i < m; ++i) {
        VectorXd z(dim_random);
        for (int k = 0; k < dim_random; ++k) z[k] = rng.normal();
        const VectorXd u = chol_l * z;

        Group g;
        g.id = std::to_string(i + 1);
        g.x.resize(n, dim_fixed);
        g.y.resize(n);
        for (int j = 0; j < n; ++j) {
            g.x(j, 0) = 1.0;
            for (int k = 1; k < dim_fixed; ++k) g.x(j, k) = rng.uniform();
            const double eta =
                g.x.row(j).dot(beta_true) + g.x.row(j).head(dim_random).dot(u);
            switch (family) {
                case Family::bernoulli: {
                    const double p = 1.0 / (1.0 + std::exp(-eta));
                    g.y[j] = rng.bernoulli(p) ? 1.0 : 0.0;
                    break;
                }
                case Family::gaussian:
                    g.y[j] = eta + rng.normal();
                    break;
                case Family::poisson: {
                    // Inverse-CDF search keeps one uniform per response.
                    const double lambda = std::exp(eta);
                    double udraw = rng.uniform();
                    double cdf = std::exp(-lambda), pmf = cdf;
                    int k = 0;
                    while (udraw > cdf && k < 100000) {
                        ++k;
                        pmf *= lambda / k;
                        cdf += pmf;
                    }
                    g.y[j] = k;
                    break;
                }
                case Family::gamma:
                    throw std::invalid_argument("generate_dataset: gamma generation unsupported");
            }
        }
        groups.push_back(std::move(g));
    }
    return GroupedDataset(std::move(groups), dim_fixed);
}

namespace {

struct ReplicateOutcome {
    bool usable = false;
    // covered[param][method 0=one-term,1=two-term]
    std::vector<std::array<bool, 2>> covered;
};

}  // namespace

CoverageResult run_coverage(const SimConfig& config) {
    config.validate();
    const int dim_fixed = static_cast<int>(config.beta_true.size());
    const int dim_random = static_cast<int>(config.sigma_true.rows());
    const auto labels = parameter_labels(dim_fixed, dim_random);
    const int n_params = static_cast<int>(labels.size());

    VectorXd truth(n_params);
    truth.head(dim_fixed) = config.beta_true;
    truth.tail(n_params - dim_fixed) = vech(config.sigma_true);

    GlmmSpec spec;
    spec.family = config.family;
    spec.dim_fixed = dim_fixed;
    spec.dim_random = dim_random;
    spec.phi_mode = config.phi_mode;
    spec.phi_fixed = config.phi_value;
    spec.validate();

    GaussianExpectationOptions quad_opts;
    quad_opts.tol = config.quad_tol;

    CoverageResult result;
    for (int m : config.m_grid) {
        const int n = config.n_rule(m);
        std::vector<ReplicateOutcome> outcomes(config.replicates);
        parallel_for(
            config.replicates,
            [&](long rep) {
                SplitRng rng(config.seed, static_cast<std::uint64_t>(m),
                             static_cast<std::uint64_t>(rep));
                ReplicateOutcome& outcome = outcomes[rep];
                try {
                    const GroupedDataset data = generate_dataset(
                        m, n, config.beta_true, config.sigma_true, config.family, rng);
                    const FitResult fitted = fit(data, spec, config.fit_options);
                    if (!fitted.converged) return;
                    const StudentizedReport report =
                        confidence_intervals(data, spec, fitted, config.alpha, quad_opts);
                    outcome.covered.assign(n_params, {false, false});
                    for (const auto& ci : report.intervals) {
                        const auto it = std::find(labels.begin(), labels.end(), ci.parameter);
                        if (it == labels.end()) continue;
                        const int p = static_cast<int>(it - labels.begin());
                        const int method_idx = (ci.method == "one-term") ? 0 : 1;
                        outcome.covered[p][method_idx] =
                            ci.lower <= truth[p] && truth[p] <= ci.upper;
                    }
                    outcome.usable = true;
                } catch (const std::exception&) {
                    outcome.usable = false;
                }
            },
            config.threads);

        int used = 0;
        for (const auto& outcome : outcomes) used += outcome.usable ? 1 : 0;
        const int failures = config.replicates - used;
        if (failures * 10 > config.replicates) {
            std::ostringstream warn;
            warn << "grid point m=" << m << ": " << failures << "/" << config.replicates
                 << " replicates failed to converge";
            result.warnings.push_back(warn.str());
        }

        for (int p = 0; p < n_params; ++p) {
            for (int method_idx = 0; method_idx < 2; ++method_idx) {
                long hits = 0;
                for (const auto& outcome : outcomes) {
                    if (outcome.usable && outcome.covered[p][method_idx]) ++hits;
                }
                CoverageRecord record;
                record.m = m;
                record.n = n;
                record.parameter = labels[p];
                record.method = method_idx == 0 ? "one-term" : "two-term";
                record.replicates_used = used;
                record.failures = failures;
                record.coverage = used > 0 ? static_cast<double>(hits) / used : 0.0;
                record.std_error =
                    used > 0 ? std::sqrt(record.coverage * (1.0 - record.coverage) / used) : 0.0;
                result.records.push_back(std::move(record));
            }
        }
    }
    return result;
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

void emit_outputs(const CoverageResult& result, const SimConfig& config,
                  const std::string& out_dir) {
    if (result.records.empty()) {
        throw std::invalid_argument("emit_outputs: no records to write");
    }
    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "'");

    // Stable ordering: grid order by m, then parameter label order, then method.
    const auto labels =
        parameter_labels(static_cast<int>(config.beta_true.size()),
                         static_cast<int>(config.sigma_true.rows()));
    auto label_rank = [&](const std::string& name) {
        const auto it = std::find(labels.begin(), labels.end(), name);
        return it == labels.end() ? labels.size() : static_cast<size_t>(it - labels.begin());
    };
    std::vector<CoverageRecord> records = result.records;
    std::stable_sort(records.begin(), records.end(),
                     [&](const CoverageRecord& a, const CoverageRecord& b) {
                         if (a.m != b.m) return a.m < b.m;
                         const auto ra = label_rank(a.parameter), rb = label_rank(b.parameter);
                         if (ra != rb) return ra < rb;
                         return a.method < b.method;
                     });

    std::ostringstream cov;
    cov << "m,n,parameter,method,coverage,std_error,replicates_used,failures\n";
    for (const auto& r : records) {
        cov << r.m << ',' << r.n << ',' << r.parameter << ',' << r.method << ','
            << format_double(r.coverage) << ',' << format_double(r.std_error) << ','
            << r.replicates_used << ',' << r.failures << "\n";
    }
    write_text_file(dir / "coverage.csv", cov.str());

    for (const auto& label : labels) {
        std::map<int, std::array<const CoverageRecord*, 2>> by_m;
        for (const auto& r : records) {
            if (r.parameter != label) continue;
            by_m[r.m][r.method == "one-term" ? 0 : 1] = &r;
        }
        if (by_m.empty()) continue;
        std::ostringstream plot;
        plot << "m,coverage_1t,coverage_2t,band_lo,band_hi\n";
        for (const auto& [m, pair] : by_m) {
            if (!pair[0] || !pair[1]) continue;
            // The band brackets the two-term curve at +/- two proportion SEs.
            plot << m << ',' << format_double(pair[0]->coverage) << ','
                 << format_double(pair[1]->coverage) << ','
                 << format_double(pair[1]->coverage - 2.0 * pair[1]->std_error) << ','
                 << format_double(pair[1]->coverage + 2.0 * pair[1]->std_error) << "\n";
        }
        write_text_file(dir / ("plotdata_" + label + ".csv"), plot.str());
    }

    nlohmann::json manifest;
    manifest["artifact"] = "glmm-asym";
    manifest["version"] = kArtifactVersion;
    manifest["seed"] = config.seed;
    manifest["config"] = sim_config_to_text(config);
    manifest["warnings"] = result.warnings;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<CoverageRecord> read_coverage_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty coverage file");
    std::vector<CoverageRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        CoverageRecord r;
        std::getline(ss, field, ',');
        r.m = std::stoi(field);
        std::getline(ss, field, ',');
        r.n = std::stoi(field);
        std::getline(ss, r.parameter, ',');
        std::getline(ss, r.method, ',');
        std::getline(ss, field, ',');
        r.coverage = std::stod(field);
        std::getline(ss, field, ',');
        r.std_error = std::stod(field);
        std::getline(ss, field, ',');
        r.replicates_used = std::stoi(field);
        std::getline(ss, field, ',');
        r.failures = std::stoi(field);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace glmmasym
