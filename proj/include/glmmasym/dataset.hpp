#ifndef GLMMASYM_DATASET_HPP
#define GLMMASYM_DATASET_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "glmmasym/expfam.hpp"

// Grouped regression data and the model shape it must conform to.

namespace glmmasym {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Group {
    std::string id;
    MatrixXd x;  // n_i x d_F design rows
    VectorXd y;  // n_i responses
};

// Construction canonicalises: groups ordered by id (numeric where every id
// parses as a number), rows within a group sorted by (y, x lexicographic).
// Any permutation of the same data therefore yields a bit-identical object,
// which makes downstream likelihood values order-independent.
class GroupedDataset {
public:
    GroupedDataset() = default;
    GroupedDataset(std::vector<Group> groups, int dim_fixed);

    int num_groups() const { return static_cast<int>(groups_.size()); }
    int dim_fixed() const { return dim_fixed_; }
    const Group& group(int i) const { return groups_[i]; }
    const std::vector<Group>& groups() const { return groups_; }

    long total_rows() const;
    // Average within-group sample size (1/m) sum n_i.
    double mean_group_size() const;

private:
    std::vector<Group> groups_;
    int dim_fixed_ = 0;
};

// Reads `group,y,x1,...,xK` comma-separated rows (UTF-8, header required,
// no missing values).
GroupedDataset read_dataset_csv(const std::string& path);

void write_dataset_csv(const GroupedDataset& data, const std::string& path);

enum class PhiMode { fixed, pearson, profile_mle };

PhiMode phi_mode_from_name(const std::string& name);
std::string phi_mode_name(PhiMode mode);

struct GlmmSpec {
    Family family = Family::gaussian;
    int dim_fixed = 0;   // d_F
    int dim_random = 0;  // d_R, leading predictors carry the random effects
    PhiMode phi_mode = PhiMode::fixed;
    double phi_fixed = 1.0;

    int dim_b() const { return dim_fixed - dim_random; }
    void validate() const;

    // Default dispersion handling for the family: profile likelihood for
    // gaussian/gamma, Pearson plug-in (fit at phi = 1) for bernoulli/poisson.
    static GlmmSpec with_defaults(Family family, int dim_fixed, int dim_random);
};

}  // namespace glmmasym

#endif
