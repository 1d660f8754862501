#include "bdarma/special_functions.hpp"

#include "support.hpp"

#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

using bdarma::special::digamma;
using bdarma::special::log_gamma;

TEST_SUITE("special_functions") {

TEST_CASE("log_gamma and digamma match high-precision values at 20 points") {
    const auto table = testing::load_fixture("special_functions.json");
    REQUIRE(table.size() == 20);
    for (const auto& row : table) {
        const double x = row["x"].get<double>();
        CAPTURE(x);
        CHECK(testing::rel_err(log_gamma(x), row["lgamma"].get<double>()) < 1e-12);
        CHECK(testing::rel_err(digamma(x), row["digamma"].get<double>()) < 1e-12);
    }
}

TEST_CASE("exact values at small integers") {
    CHECK(log_gamma(1.0) == 0.0);
    CHECK(log_gamma(2.0) == 0.0);
    CHECK(log_gamma(3.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-15));
    CHECK(digamma(2.0) - digamma(1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("recurrences hold on a grid") {
    for (double x = 0.05; x < 40.0; x *= 1.37) {
        CAPTURE(x);
        CHECK(testing::rel_err(log_gamma(x + 1.0) - log_gamma(x), std::log(x)) < 1e-13);
        CHECK(testing::rel_err(digamma(x + 1.0) - digamma(x), 1.0 / x) < 1e-12);
    }
}

TEST_CASE("agrees with Boost over a wide range") {
    for (double x = 1e-4; x < 1e5; x *= 1.11) {
        CAPTURE(x);
        CHECK(testing::rel_err(log_gamma(x), boost::math::lgamma(x)) < 1e-13);
        CHECK(testing::rel_err(digamma(x), boost::math::digamma(x)) < 1e-13);
    }
}

TEST_CASE("reflection for negative non-integers and poles") {
    CHECK(testing::rel_err(log_gamma(-0.5), std::log(2.0 * std::sqrt(M_PI))) < 1e-13);
    CHECK(testing::rel_err(digamma(-0.5), boost::math::digamma(-0.5)) < 1e-12);
    CHECK(std::isinf(log_gamma(0.0)));
    CHECK(std::isinf(log_gamma(-3.0)));
}

}
