#ifndef GLMMASYM_MATCALC_HPP
#define GLMMASYM_MATCALC_HPP

#include <Eigen/Dense>
#include <vector>

// Dense matrix-calculus primitives: half-vectorisation, duplication and
// commutation matrices, and the array-matrix contraction used by the
// higher-order covariance expansions.
//
// Conventions fixed repo-wide:
//   * vec stacks columns (column-major).
//   * vech stacks the columns of the lower triangle, diagonal included,
//     so for d = 2: vech(A) = (A11, A21, A22).
// The duplication matrix maps the second convention onto the first.

namespace glmmasym {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Dense d1 x d2 x d3 array stored flat, index (r,s,t) lexicographic.
class ThreeArray {
public:
    ThreeArray() : d1_(0), d2_(0), d3_(0) {}
    ThreeArray(int d1, int d2, int d3);

    int dim1() const { return d1_; }
    int dim2() const { return d2_; }
    int dim3() const { return d3_; }

    double& operator()(int r, int s, int t) { return data_[index(r, s, t)]; }
    double operator()(int r, int s, int t) const { return data_[index(r, s, t)]; }

    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    ThreeArray& operator+=(const ThreeArray& other);
    ThreeArray& operator*=(double c);

    // Slice A(.,.,t) as a d1 x d2 matrix.
    MatrixXd slice(int t) const;

private:
    int d1_, d2_, d3_;
    std::vector<double> data_;

    int index(int r, int s, int t) const { return (r * d2_ + s) * d3_ + t; }
};

// t-th output entry is sum_{r,s} A(r,s,t) * M(r,s).
VectorXd star(const ThreeArray& a, const MatrixXd& m);

// Column-major stacking of a matrix.
VectorXd vec(const MatrixXd& a);

// Inverse of vec for square targets: vec(vec_inv(b, d)) == b.
MatrixXd vec_inv(const VectorXd& b, int d);

// Lower-triangle column stacking of a symmetric matrix. Asymmetric input
// (relative tolerance 1e-10) is an error, never silently symmetrised.
VectorXd vech(const MatrixXd& a);

// Unique symmetric matrix with the given half-vectorisation.
MatrixXd vech_inv(const VectorXd& v);

// D_d: the d^2 x d(d+1)/2 zero-one matrix with D_d vech(A) = vec(A) for
// all symmetric A.
MatrixXd duplication_matrix(int d);

// Moore-Penrose inverse (D_d^T D_d)^{-1} D_d^T of the duplication matrix.
MatrixXd duplication_pinv(int d);

// K_d: the d^2 x d^2 zero-one matrix with K_d vec(B) = vec(B^T).
MatrixXd commutation_matrix(int d);

// Kronecker product A (x) B.
MatrixXd kronecker(const MatrixXd& a, const MatrixXd& b);

}  // namespace glmmasym

#endif
