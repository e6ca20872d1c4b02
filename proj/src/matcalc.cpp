#include "glmmasym/matcalc.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace glmmasym {

ThreeArray::ThreeArray(int d1, int d2, int d3) : d1_(d1), d2_(d2), d3_(d3) {
    if (d1 < 1 || d2 < 1 || d3 < 1) {
        throw std::invalid_argument("ThreeArray: all dimensions must be >= 1");
    }
    data_.assign(static_cast<size_t>(d1) * d2 * d3, 0.0);
}

ThreeArray& ThreeArray::operator+=(const ThreeArray& other) {
    if (other.d1_ != d1_ || other.d2_ != d2_ || other.d3_ != d3_) {
        throw std::invalid_argument("ThreeArray: dimension mismatch in +=");
    }
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

ThreeArray& ThreeArray::operator*=(double c) {
    for (double& x : data_) x *= c;
    return *this;
}

MatrixXd ThreeArray::slice(int t) const {
    MatrixXd out(d1_, d2_);
    for (int r = 0; r < d1_; ++r)
        for (int s = 0; s < d2_; ++s) out(r, s) = (*this)(r, s, t);
    return out;
}

VectorXd star(const ThreeArray& a, const MatrixXd& m) {
    if (m.rows() != a.dim1() || m.cols() != a.dim2()) {
        throw std::invalid_argument(
            "star: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
            " but array slices are " + std::to_string(a.dim1()) + "x" + std::to_string(a.dim2()));
    }
    VectorXd out = VectorXd::Zero(a.dim3());
    for (int t = 0; t < a.dim3(); ++t) {
        double acc = 0.0;
        for (int r = 0; r < a.dim1(); ++r)
            for (int s = 0; s < a.dim2(); ++s) acc += a(r, s, t) * m(r, s);
        out[t] = acc;
    }
    return out;
}

VectorXd vec(const MatrixXd& a) {
    VectorXd out(a.size());
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) out[k++] = a(i, j);
    return out;
}

MatrixXd vec_inv(const VectorXd& b, int d) {
    if (d < 1) throw std::invalid_argument("vec_inv: d must be >= 1");
    if (b.size() != static_cast<Eigen::Index>(d) * d) {
        throw std::invalid_argument("vec_inv: vector length " + std::to_string(b.size()) +
                                    " is not " + std::to_string(d) + "^2");
    }
    MatrixXd out(d, d);
    Eigen::Index k = 0;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) out(i, j) = b[k++];
    return out;
}

VectorXd vech(const MatrixXd& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("vech: matrix must be square");
    }
    const int d = static_cast<int>(a.rows());
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * scale) {
                throw std::invalid_argument("vech: matrix is not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
    VectorXd out(d * (d + 1) / 2);
    Eigen::Index k = 0;
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) out[k++] = a(i, j);
    return out;
}

MatrixXd vech_inv(const VectorXd& v) {
    // Invert q = d(d+1)/2.
    const int q = static_cast<int>(v.size());
    const int d = static_cast<int>(std::lround((std::sqrt(8.0 * q + 1.0) - 1.0) / 2.0));
    if (d * (d + 1) / 2 != q) {
        throw std::invalid_argument("vech_inv: length " + std::to_string(q) +
                                    " is not d(d+1)/2 for any d");
    }
    MatrixXd out(d, d);
    Eigen::Index k = 0;
    for (int j = 0; j < d; ++j) {
        for (int i = j; i < d; ++i) {
            out(i, j) = v[k];
            out(j, i) = v[k];
            ++k;
        }
    }
    return out;
}

namespace {

// vech position of (i,j) with i >= j, matching the stacking in vech().
int vech_index(int i, int j, int d) {
    return j * d - j * (j - 1) / 2 + (i - j);
}

}  // namespace

MatrixXd duplication_matrix(int d) {
    if (d < 1) throw std::invalid_argument("duplication_matrix: d must be >= 1");
    MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(d) * d, d * (d + 1) / 2);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            const int row = j * d + i;  // vec position of (i,j)
            const int col = (i >= j) ? vech_index(i, j, d) : vech_index(j, i, d);
            out(row, col) = 1.0;
        }
    }
    return out;
}

MatrixXd duplication_pinv(int d) {
    const MatrixXd dd = duplication_matrix(d);
    // D^T D is diagonal (1 on diagonal-element rows, 2 elsewhere), so the
    // explicit normal-equations form is exact and cheap.
    const MatrixXd dtd = dd.transpose() * dd;
    return dtd.ldlt().solve(dd.transpose());
}

MatrixXd commutation_matrix(int d) {
    if (d < 1) throw std::invalid_argument("commutation_matrix: d must be >= 1");
    MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(d) * d);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            // row: vec position of (i,j) in B^T view; column: vec position of (j,i).
            out(j * d + i, i * d + j) = 1.0;
        }
    }
    return out;
}

MatrixXd kronecker(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace glmmasym
