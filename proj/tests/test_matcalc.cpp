#include <doctest.h>

#include <Eigen/Dense>

#include "glmmasym/matcalc.hpp"
#include "glmmasym/rng.hpp"

using namespace glmmasym;

namespace {

MatrixXd random_matrix(int rows, int cols, SplitRng& rng) {
    MatrixXd out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out(i, j) = rng.normal();
    return out;
}

MatrixXd random_symmetric(int d, SplitRng& rng) {
    const MatrixXd a = random_matrix(d, d, rng);
    return 0.5 * (a + a.transpose());
}

MatrixXd random_spd(int d, SplitRng& rng) {
    const MatrixXd a = random_matrix(d, d, rng);
    return a * a.transpose() + MatrixXd::Identity(d, d);
}

}  // namespace

TEST_CASE("vech basics") {
    CHECK(vech(MatrixXd::Constant(1, 1, 3.5))[0] == 3.5);

    MatrixXd a(2, 2);
    a << 1, 2, 2, 3;
    const VectorXd v = vech(a);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 2.0);
    CHECK(v[2] == 3.0);

    MatrixXd asym(2, 2);
    asym << 1, 2, 2.1, 3;
    CHECK_THROWS_AS(vech(asym), std::invalid_argument);
    CHECK_THROWS_AS(vech(MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("vech defining property via duplication matrix") {
    SplitRng rng(101);
    const MatrixXd a = random_symmetric(4, rng);
    const VectorXd lhs = duplication_matrix(4) * vech(a);
    CHECK((lhs - vec(a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vec and vec_inv") {
    MatrixXd a(2, 2);
    a << 1, 3, 2, 4;
    const VectorXd v = vec(a);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 2.0);
    CHECK(v[2] == 3.0);
    CHECK(v[3] == 4.0);

    const MatrixXd back = vec_inv((VectorXd(4) << 1, 2, 3, 4).finished(), 2);
    CHECK(back(0, 0) == 1.0);
    CHECK(back(1, 0) == 2.0);
    CHECK(back(0, 1) == 3.0);
    CHECK(back(1, 1) == 4.0);

    CHECK_THROWS_AS(vec_inv(VectorXd::Zero(5), 2), std::invalid_argument);

    SplitRng rng(7);
    const MatrixXd b = random_matrix(3, 3, rng);
    CHECK((vec_inv(vec(b), 3) - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vec_inv contraction identities hold for d <= 4") {
    SplitRng rng(8);
    for (int d = 1; d <= 4; ++d) {
        for (int rep = 0; rep < 25; ++rep) {
            VectorXd a(d), b(d * d);
            for (int i = 0; i < d; ++i) a[i] = rng.normal();
            for (int i = 0; i < d * d; ++i) b[i] = rng.normal();
            const MatrixXd eye = MatrixXd::Identity(d, d);
            const VectorXd lhs1 = kronecker(a.transpose(), eye) * b;
            CHECK((lhs1 - vec_inv(b, d) * a).cwiseAbs().maxCoeff() < 1e-12);
            const VectorXd lhs2 = kronecker(eye, a.transpose()) * b;
            CHECK((lhs2 - vec_inv(b, d).transpose() * a).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("duplication matrix printed form") {
    MatrixXd expected(4, 3);
    expected << 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1;
    CHECK((duplication_matrix(2) - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(duplication_matrix(1)(0, 0) == 1.0);
    CHECK_THROWS_AS(duplication_matrix(0), std::invalid_argument);
}

TEST_CASE("duplication matrix defining property, 50 random symmetric d=3") {
    SplitRng rng(909);
    const MatrixXd dup = duplication_matrix(3);
    for (int rep = 0; rep < 50; ++rep) {
        const MatrixXd a = random_symmetric(3, rng);
        CHECK((dup * vech(a) - vec(a)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("commutation matrix printed form and involution") {
    MatrixXd expected(4, 4);
    expected << 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1;
    CHECK((commutation_matrix(2) - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(commutation_matrix(1)(0, 0) == 1.0);
    CHECK_THROWS_AS(commutation_matrix(0), std::invalid_argument);

    SplitRng rng(11);
    for (int d = 1; d <= 5; ++d) {
        const MatrixXd comm = commutation_matrix(d);
        const MatrixXd b = random_matrix(d, d, rng);
        CHECK((comm * vec(b) - vec(b.transpose())).cwiseAbs().maxCoeff() == 0.0);
        CHECK((comm * comm - MatrixXd::Identity(d * d, d * d)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("commutation swaps kronecker factors with a vector") {
    SplitRng rng(12);
    const MatrixXd a = random_matrix(4, 4, rng);
    const VectorXd b = random_matrix(4, 1, rng);
    const MatrixXd lhs = commutation_matrix(4) * kronecker(a, b);
    CHECK((lhs - kronecker(b, a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("duplication pseudo-inverse") {
    CHECK(duplication_pinv(1)(0, 0) == 1.0);
    const MatrixXd prod = duplication_pinv(2) * duplication_matrix(2);
    CHECK((prod - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-13);

    SplitRng rng(13);
    const MatrixXd a = random_spd(3, rng);
    const MatrixXd dup = duplication_matrix(3);
    const MatrixXd dup_pinv = duplication_pinv(3);
    const MatrixXd lhs = (dup.transpose() * kronecker(a, a) * dup).inverse();
    const MatrixXd rhs = dup_pinv * kronecker(a.inverse(), a.inverse()) * dup_pinv.transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("matrix identity battery, d <= 4, 100 instances each") {
    SplitRng rng(4242);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 4);
        const MatrixXd a = random_matrix(d, d, rng);
        const MatrixXd b = random_matrix(d, d, rng);
        const MatrixXd c = random_matrix(d, d, rng);
        const MatrixXd spd = random_spd(d, rng);
        const VectorXd v = random_matrix(d, 1, rng);
        const MatrixXd dup = duplication_matrix(d);
        const MatrixXd dup_pinv = duplication_pinv(d);
        const MatrixXd comm = commutation_matrix(d);

        worst = std::max(worst,
                         (comm * kronecker(a, v) - kronecker(v, a)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (comm * dup - dup).cwiseAbs().maxCoeff());
        worst = std::max(
            worst,
            (dup.transpose() * vec(a) - dup.transpose() * vec(a.transpose())).cwiseAbs().maxCoeff());
        worst = std::max(worst, (dup * dup_pinv * kronecker(spd, spd) * dup_pinv.transpose() -
                                 kronecker(spd, spd) * dup_pinv.transpose())
                                    .cwiseAbs()
                                    .maxCoeff());
        worst =
            std::max(worst, ((dup.transpose() * kronecker(spd, spd) * dup).inverse() -
                             dup_pinv * kronecker(spd.inverse(), spd.inverse()) *
                                 dup_pinv.transpose())
                                .cwiseAbs()
                                .maxCoeff());
        worst = std::max(
            worst, (vec(a * b * c) - kronecker(c.transpose(), a) * vec(b)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (kronecker(a, b) * kronecker(c, spd) -
                                 kronecker(MatrixXd(a * c), MatrixXd(b * spd)))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("three-array star contraction") {
    ThreeArray unit(1, 1, 1);
    unit(0, 0, 0) = 2.5;
    CHECK(star(unit, MatrixXd::Constant(1, 1, 4.0))[0] == 10.0);

    ThreeArray ones(2, 2, 2);
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
            for (int t = 0; t < 2; ++t) ones(r, s, t) = 1.0;
    const VectorXd v = star(ones, MatrixXd::Identity(2, 2));
    CHECK(v[0] == 2.0);
    CHECK(v[1] == 2.0);

    SplitRng rng(55);
    ThreeArray arr(3, 3, 2);
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
            for (int t = 0; t < 2; ++t) arr(r, s, t) = rng.normal();
    const MatrixXd m = random_matrix(3, 3, rng);
    const VectorXd fast = star(arr, m);
    for (int t = 0; t < 2; ++t) {
        double slow = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) slow += arr(r, s, t) * m(r, s);
        CHECK(fast[t] == doctest::Approx(slow).epsilon(1e-14));
    }

    CHECK_THROWS_AS(star(arr, MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("star is bilinear") {
    SplitRng rng(56);
    ThreeArray arr(2, 3, 2);
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 3; ++s)
            for (int t = 0; t < 2; ++t) arr(r, s, t) = rng.normal();
    const MatrixXd m1 = random_matrix(2, 3, rng);
    const MatrixXd m2 = random_matrix(2, 3, rng);
    const VectorXd sum = star(arr, m1 + m2);
    CHECK((sum - star(arr, m1) - star(arr, m2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vech_inv round trip") {
    SplitRng rng(57);
    const MatrixXd a = random_symmetric(3, rng);
    CHECK((vech_inv(vech(a)) - a).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(vech_inv(VectorXd::Zero(4)), std::invalid_argument);
}
