#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "glmmasym/expfam.hpp"
#include "glmmasym/rng.hpp"

using namespace glmmasym;

TEST_CASE("family names round trip") {
    for (const auto* name : {"gaussian", "bernoulli", "poisson", "gamma"}) {
        CHECK(family_name(family_from_name(name)) == name);
    }
    CHECK_THROWS_AS(family_from_name("binomial"), std::invalid_argument);
    CHECK(family_dispersion_fixed(Family::bernoulli));
    CHECK(family_dispersion_fixed(Family::poisson));
    CHECK_FALSE(family_dispersion_fixed(Family::gaussian));
}

TEST_CASE("cumulant values at reference points") {
    CHECK(cumulant(Family::gaussian, 1.5, 0) == doctest::Approx(1.125).epsilon(1e-15));
    CHECK(cumulant(Family::gaussian, 1.5, 1) == 1.5);
    CHECK(cumulant(Family::gaussian, 1.5, 2) == 1.0);
    CHECK(cumulant(Family::gaussian, 1.5, 3) == 0.0);

    CHECK(cumulant(Family::bernoulli, 0.0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(cumulant(Family::bernoulli, 0.0, 1) == doctest::Approx(0.5));
    CHECK(cumulant(Family::bernoulli, 0.0, 2) == doctest::Approx(0.25));
    CHECK(cumulant(Family::bernoulli, 0.0, 3) == doctest::Approx(0.0));

    CHECK(cumulant(Family::gamma, -1.0, 0) == doctest::Approx(0.0));
    CHECK(cumulant(Family::gamma, -1.0, 1) == doctest::Approx(1.0));
    CHECK(cumulant(Family::gamma, -1.0, 2) == doctest::Approx(1.0));
    CHECK(cumulant(Family::gamma, -1.0, 3) == doctest::Approx(2.0));

    CHECK(cumulant(Family::poisson, 0.7, 2) == doctest::Approx(std::exp(0.7)));
}

TEST_CASE("cumulant domain and order errors") {
    CHECK_THROWS_AS(cumulant(Family::gamma, 0.0, 0), std::domain_error);
    CHECK_THROWS_AS(cumulant(Family::gamma, 1.0, 1), std::domain_error);
    CHECK_THROWS_AS(cumulant(Family::gaussian, 0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(cumulant(Family::gaussian, 0.0, -1), std::invalid_argument);
}

TEST_CASE("variance function") {
    CHECK(variance_function(Family::gaussian, 7.0) == 1.0);
    CHECK(variance_function(Family::bernoulli, 0.5) == doctest::Approx(0.25));
    CHECK(variance_function(Family::poisson, 3.0) == doctest::Approx(3.0));
    CHECK(variance_function(Family::gamma, 2.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(variance_function(Family::bernoulli, 1.2), std::domain_error);
    CHECK_THROWS_AS(variance_function(Family::poisson, -1.0), std::domain_error);
}

TEST_CASE("derivatives match central finite differences at 200 random points") {
    SplitRng rng(99);
    const double step = 1e-5;
    for (const Family family :
         {Family::gaussian, Family::bernoulli, Family::poisson, Family::gamma}) {
        for (int rep = 0; rep < 200; ++rep) {
            double eta = 4.0 * (rng.uniform() - 0.5);
            if (family == Family::gamma) eta = -0.2 - 3.0 * rng.uniform();
            const double h = step * (1.0 + std::abs(eta));
            for (int order = 1; order <= 3; ++order) {
                const double fd =
                    (cumulant(family, eta + h, order - 1) - cumulant(family, eta - h, order - 1)) /
                    (2.0 * h);
                const double exact = cumulant(family, eta, order);
                const double scale = std::max(1.0, std::abs(exact));
                CHECK(std::abs(fd - exact) / scale < 1e-6);
            }
            CHECK(cumulant(family, eta, 2) > 0.0);
        }
    }
}

TEST_CASE("gaussian non-kernel terms recover the exact density") {
    // {y*eta - b(eta) + c(y)}/phi + d(y,phi) must equal the normal logpdf.
    const double y = 0.7, eta = 1.2, phi = 2.3;
    const double quasi = (y * eta - cumulant(Family::gaussian, eta, 0) +
                          log_density_c(Family::gaussian, y)) /
                             phi +
                         log_density_d(Family::gaussian, y, phi);
    const double logpdf = -0.5 * std::log(2.0 * M_PI * phi) - 0.5 * (y - eta) * (y - eta) / phi;
    CHECK(quasi == doctest::Approx(logpdf).epsilon(1e-12));
}

TEST_CASE("poisson non-kernel terms recover the exact pmf at phi = 1") {
    const double y = 4.0, eta = 0.3;
    const double quasi = y * eta - cumulant(Family::poisson, eta, 0) +
                         log_density_d(Family::poisson, y, 1.0);
    const double logpmf = y * eta - std::exp(eta) - std::lgamma(y + 1.0);
    CHECK(quasi == doctest::Approx(logpmf).epsilon(1e-12));
}
