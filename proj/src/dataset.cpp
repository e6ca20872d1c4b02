#include "glmmasym/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace glmmasym {

namespace {

bool whole_row_less(const MatrixXd& x, const VectorXd& y, Eigen::Index a, Eigen::Index b) {
    if (y[a] != y[b]) return y[a] < y[b];
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        if (x(a, k) != x(b, k)) return x(a, k) < x(b, k);
    }
    return false;
}

// Sort the rows of a group by (y, x lexicographic) so that equal data in
// any row order produces the identical in-memory group.
void canonicalise_group(Group& g) {
    const Eigen::Index n = g.y.size();
    std::vector<Eigen::Index> perm(n);
    for (Eigen::Index i = 0; i < n; ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](Eigen::Index a, Eigen::Index b) { return whole_row_less(g.x, g.y, a, b); });
    MatrixXd x(n, g.x.cols());
    VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = g.x.row(perm[i]);
        y[i] = g.y[perm[i]];
    }
    g.x = std::move(x);
    g.y = std::move(y);
}

bool all_ids_numeric(const std::vector<Group>& groups) {
    for (const auto& g : groups) {
        char* end = nullptr;
        std::strtod(g.id.c_str(), &end);
        if (end == g.id.c_str() || *end != '\0') return false;
    }
    return true;
}

}  // namespace

GroupedDataset::GroupedDataset(std::vector<Group> groups, int dim_fixed)
    : groups_(std::move(groups)), dim_fixed_(dim_fixed) {
    if (groups_.empty()) throw std::invalid_argument("dataset: needs at least one group");
    if (dim_fixed_ < 1) throw std::invalid_argument("dataset: d_F must be >= 1");
    for (const auto& g : groups_) {
        if (g.y.size() < 1) throw std::invalid_argument("dataset: empty group '" + g.id + "'");
        if (g.x.rows() != g.y.size() || g.x.cols() != dim_fixed_) {
            throw std::invalid_argument("dataset: group '" + g.id + "' has inconsistent shape");
        }
        if (!g.x.allFinite() || !g.y.allFinite()) {
            throw std::invalid_argument("dataset: non-finite value in group '" + g.id + "'");
        }
    }
    const bool numeric = all_ids_numeric(groups_);
    std::sort(groups_.begin(), groups_.end(), [&](const Group& a, const Group& b) {
        if (numeric) {
            return std::strtod(a.id.c_str(), nullptr) < std::strtod(b.id.c_str(), nullptr);
        }
        return a.id < b.id;
    });
    for (size_t i = 1; i < groups_.size(); ++i) {
        if (groups_[i].id == groups_[i - 1].id) {
            throw std::invalid_argument("dataset: duplicate group id '" + groups_[i].id + "'");
        }
    }
    for (auto& g : groups_) canonicalise_group(g);
}

long GroupedDataset::total_rows() const {
    long n = 0;
    for (const auto& g : groups_) n += g.y.size();
    return n;
}

double GroupedDataset::mean_group_size() const {
    return static_cast<double>(total_rows()) / num_groups();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, long line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                    ": cannot parse number '" + s + "'");
    }
    return v;
}

struct RawRow {
    double y;
    std::vector<double> x;
};

}  // namespace

GroupedDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("dataset file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "group" || header[1] != "y") {
        throw std::invalid_argument("dataset header must be group,y,x1,...,xK");
    }
    const int dim_fixed = static_cast<int>(header.size()) - 2;

    std::map<std::string, std::vector<RawRow>> by_id;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != dim_fixed + 2) {
            throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                        ": expected " + std::to_string(dim_fixed + 2) + " fields");
        }
        for (const auto& f : fields) {
            if (f.empty()) {
                throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                            ": missing values are not allowed");
            }
        }
        RawRow row;
        row.y = parse_double(fields[1], line_no);
        row.x.resize(dim_fixed);
        for (int k = 0; k < dim_fixed; ++k) row.x[k] = parse_double(fields[2 + k], line_no);
        by_id[fields[0]].push_back(std::move(row));
    }
    if (by_id.empty()) throw std::invalid_argument("dataset file '" + path + "' has no data rows");

    std::vector<Group> groups;
    groups.reserve(by_id.size());
    for (auto& [id, rows] : by_id) {
        Group g;
        g.id = id;
        g.x.resize(static_cast<Eigen::Index>(rows.size()), dim_fixed);
        g.y.resize(static_cast<Eigen::Index>(rows.size()));
        for (size_t r = 0; r < rows.size(); ++r) {
            g.y[static_cast<Eigen::Index>(r)] = rows[r].y;
            for (int k = 0; k < dim_fixed; ++k) g.x(static_cast<Eigen::Index>(r), k) = rows[r].x[k];
        }
        groups.push_back(std::move(g));
    }
    return GroupedDataset(std::move(groups), dim_fixed);
}

void write_dataset_csv(const GroupedDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file '" + path + "'");
    out << "group,y";
    for (int k = 1; k <= data.dim_fixed(); ++k) out << ",x" << k;
    out << "\n";
    out.precision(17);
    for (const auto& g : data.groups()) {
        for (Eigen::Index r = 0; r < g.y.size(); ++r) {
            out << g.id << ',' << g.y[r];
            for (int k = 0; k < data.dim_fixed(); ++k) out << ',' << g.x(r, k);
            out << "\n";
        }
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

PhiMode phi_mode_from_name(const std::string& name) {
    if (name == "fixed") return PhiMode::fixed;
    if (name == "pearson") return PhiMode::pearson;
    if (name == "profile-mle" || name == "profile_mle") return PhiMode::profile_mle;
    throw std::invalid_argument("unknown phi mode '" + name +
                                "' (expected fixed|pearson|profile-mle)");
}

std::string phi_mode_name(PhiMode mode) {
    switch (mode) {
        case PhiMode::fixed: return "fixed";
        case PhiMode::pearson: return "pearson";
        case PhiMode::profile_mle: return "profile-mle";
    }
    return "?";
}

void GlmmSpec::validate() const {
    if (dim_random < 1 || dim_random > dim_fixed) {
        throw std::invalid_argument("model spec requires 1 <= d_R <= d_F");
    }
    if (phi_mode == PhiMode::fixed && !(phi_fixed > 0.0)) {
        throw std::invalid_argument("fixed dispersion must be positive");
    }
}

GlmmSpec GlmmSpec::with_defaults(Family family, int dim_fixed, int dim_random) {
    GlmmSpec spec;
    spec.family = family;
    spec.dim_fixed = dim_fixed;
    spec.dim_random = dim_random;
    spec.phi_mode = family_dispersion_fixed(family) ? PhiMode::pearson : PhiMode::profile_mle;
    spec.phi_fixed = 1.0;
    spec.validate();
    return spec;
}

}  // namespace glmmasym
