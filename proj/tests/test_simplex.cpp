#include "bdarma/errors.hpp"
#include "bdarma/simplex.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace bdarma;

namespace {

PartSetPtr renewables() {
    return make_parts({"hydro", "geo", "solar", "wind", "wood", "waste", "bio"}, 6);
}

}  // namespace

TEST_SUITE("simplex") {

TEST_CASE("closure examples") {
    const auto parts7 = renewables();
    const Composition u = closure(parts7, Eigen::VectorXd::Constant(7, 2.0));
    for (std::size_t j = 0; j < 7; ++j) CHECK(u[j] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));

    const auto parts3 = default_parts(3);
    const Composition y = closure(parts3, Eigen::Vector3d(1, 1, 2));
    CHECK(y[0] == 0.25);
    CHECK(y[1] == 0.25);
    CHECK(y[2] == 0.5);

    Eigen::VectorXd means(7);
    means << 13.0, 1.64, 5.20, 12.2, 30.3, 6.51, 31.2;
    const Composition m = closure(parts7, means);
    CHECK(m.shares().sum() == doctest::Approx(1.0).epsilon(1e-15));
    for (Eigen::Index j = 0; j < 7; ++j) CHECK(m.shares()(j) == doctest::Approx(means(j) / 100.05).epsilon(1e-14));
}

TEST_CASE("closure rejects zeros naming the label") {
    const auto parts = renewables();
    Eigen::VectorXd raw = Eigen::VectorXd::Ones(7);
    raw(2) = 0.0;
    try {
        closure(parts, raw);
        FAIL("expected ZeroComponent");
    } catch (const ZeroComponent& e) {
        CHECK(std::string(e.what()).find("solar") != std::string::npos);
    }
    raw(2) = -1.0;
    CHECK_THROWS_AS(closure(parts, raw), ZeroComponent);
    std::vector<double> with_zero(7, 1.0);
    with_zero[4] = 0.0;
    const Composition r = closure_with_replacement(parts, with_zero);
    CHECK(r[4] == doctest::Approx(1e-6 / (6.0 + 7e-6)).epsilon(1e-12));
}

TEST_CASE("closure is idempotent and scale invariant") {
    Rng rng(11);
    const auto parts = default_parts(5);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd raw(5);
        for (int j = 0; j < 5; ++j) raw(j) = 0.01 + 10.0 * rng.uniform();
        const Composition a = closure(parts, raw);
        const Composition b = closure(parts, a.shares());
        const Composition c = closure(parts, Eigen::VectorXd(3.0 * raw));
        CHECK((a.shares() - b.shares()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((a.shares() - c.shares()).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("alr and alr_inv examples") {
    const auto parts7 = renewables();
    const Composition u = closure(parts7, Eigen::VectorXd::Ones(7));
    const AlrVector e = alr(u);
    CHECK(e.size() == 6);
    CHECK(e.coords().cwiseAbs().maxCoeff() < 1e-15);

    const Composition back = alr_inv(AlrVector(parts7, Eigen::VectorXd::Zero(6)));
    for (std::size_t j = 0; j < 7; ++j) CHECK(back[j] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));

    const auto parts3 = make_parts({"a", "b", "c"}, 2);
    const Composition y(parts3, Eigen::Vector3d(0.5, 0.25, 0.25));
    const AlrVector ey = alr(y);
    CHECK(ey.coords()(0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::abs(ey.coords()(1)) < 1e-15);
    const Composition yb = alr_inv(AlrVector(parts3, Eigen::Vector2d(std::log(2.0), 0.0)));
    CHECK(yb[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(yb[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(yb[2] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("alr coordinates skip the reference in label order") {
    const auto parts = make_parts({"a", "b", "c", "d"}, 1);
    const Composition y(parts, Eigen::Vector4d(0.1, 0.2, 0.3, 0.4));
    const AlrVector e = alr(y);
    CHECK(e.coords()(0) == doctest::Approx(std::log(0.5)));
    CHECK(e.coords()(1) == doctest::Approx(std::log(1.5)));
    CHECK(e.coords()(2) == doctest::Approx(std::log(2.0)));
    CHECK(parts->part_of_coord(0) == 0);
    CHECK(parts->part_of_coord(1) == 2);
    CHECK(parts->part_of_coord(2) == 3);
}

TEST_CASE("alr_inv at extreme coordinates matches arbitrary precision") {
    for (const auto& row : testing::load_fixture("alr_inv_extreme.json")) {
        const Eigen::VectorXd coords = testing::to_vector(row["coords"]);
        const Eigen::VectorXd expected = testing::to_vector(row["shares"]);
        const auto parts = default_parts(static_cast<std::size_t>(expected.size()));
        Eigen::VectorXd got(expected.size());
        detail::alr_inv_into(std::span<const double>(coords.data(), coords.size()), parts->reference_index(),
                             std::span<double>(got.data(), got.size()));
        CHECK(got.allFinite());
        CHECK(std::abs(got.sum() - 1.0) < 1e-15);
        for (Eigen::Index j = 0; j < got.size(); ++j) {
            // Shares that underflow are floored at the smallest normal double.
            if (expected(j) < 1e-300) {
                CHECK(got(j) <= 1e-300);
            } else {
                CHECK(std::abs(got(j) - expected(j)) <= 1e-15 * std::max(1e-300, expected(j)) + 1e-16);
            }
        }
    }
}

TEST_CASE("round trips over random compositions") {
    Rng rng(2024);
    for (std::size_t j_parts : {3u, 7u}) {
        const auto parts = default_parts(j_parts);
        double worst_y = 0.0, worst_e = 0.0, worst_sum = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const Composition y = testing::random_composition(parts, rng);
            worst_y = std::max(worst_y, (alr_inv(alr(y)).shares() - y.shares()).cwiseAbs().maxCoeff());
            Eigen::VectorXd e(static_cast<Eigen::Index>(j_parts - 1));
            for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = 10.0 * (rng.uniform() - 0.5);
            worst_e = std::max(worst_e, (alr(alr_inv(AlrVector(parts, e))).coords() - e).cwiseAbs().maxCoeff());
            worst_sum = std::max(worst_sum, std::abs(clr(y).sum()));
        }
        CHECK(worst_y < 1e-12);
        CHECK(worst_e < 1e-12);
        CHECK(worst_sum < 1e-10);
    }
}

TEST_CASE("clr examples") {
    const auto parts = default_parts(3);
    const Composition y(parts, Eigen::Vector3d(0.5, 0.25, 0.25));
    const double g = std::cbrt(0.5 * 0.25 * 0.25);
    const Eigen::VectorXd c = clr(y);
    CHECK(c(0) == doctest::Approx(std::log(0.5 / g)).epsilon(1e-14));
    CHECK(c(1) == doctest::Approx(std::log(0.25 / g)).epsilon(1e-14));
    CHECK(c(2) == doctest::Approx(std::log(0.25 / g)).epsilon(1e-14));
    CHECK(clr(closure(parts, Eigen::Vector3d(1, 1, 1))).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("aitchison distance is a scaled metric") {
    Rng rng(5);
    const auto parts = default_parts(7);
    for (int i = 0; i < 500; ++i) {
        const Composition a = testing::random_composition(parts, rng);
        const Composition b = testing::random_composition(parts, rng);
        const Composition c = testing::random_composition(parts, rng);
        CHECK(aitchison_rmse_distance(a, a) == 0.0);
        CHECK(aitchison_rmse_distance(a, b) == doctest::Approx(aitchison_rmse_distance(b, a)).epsilon(1e-14));
        CHECK(aitchison_rmse_distance(a, c) <= aitchison_rmse_distance(a, b) + aitchison_rmse_distance(b, c) + 1e-12);
        const double direct = (clr(a) - clr(b)).norm() / std::sqrt(7.0);
        CHECK(aitchison_rmse_distance(a, b) == doctest::Approx(direct).epsilon(1e-14));
    }
}

TEST_CASE("aitchison distance ignores common rescaling before closure") {
    Rng rng(9);
    const auto parts = default_parts(4);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd x(4), z(4);
        for (int j = 0; j < 4; ++j) {
            x(j) = 0.1 + rng.uniform();
            z(j) = 0.1 + rng.uniform();
        }
        const double d1 = aitchison_rmse_distance(closure(parts, x), closure(parts, z));
        const double d2 = aitchison_rmse_distance(closure(parts, Eigen::VectorXd(3.0 * x)),
                                                  closure(parts, Eigen::VectorXd(3.0 * z)));
        CHECK(std::abs(d1 - d2) < 1e-12);
    }
}

TEST_CASE("mixed parts are rejected") {
    const Composition a = closure(default_parts(3), Eigen::Vector3d(1, 2, 3));
    const Composition b = closure(make_parts({"x1", "x2", "x3"}, 0), Eigen::Vector3d(1, 2, 3));
    CHECK_THROWS_AS(aitchison_rmse_distance(a, b), IncompatibleComposition);
    CHECK_THROWS_AS(make_parts({"a", "a"}, 0), DomainError);
    CHECK_THROWS_AS(make_parts({"a", "b"}, 2), DomainError);
    CHECK_THROWS_AS(Composition(default_parts(2), Eigen::Vector2d(0.5, 0.6)), DomainError);
    CHECK_THROWS_AS(AlrVector(default_parts(2), Eigen::VectorXd::Constant(1, NAN)), DomainError);
}

}
