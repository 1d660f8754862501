#include "bdarma/errors.hpp"
#include "bdarma/hmc.hpp"

#include "support.hpp"

#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <chrono>

using namespace bdarma;

namespace {

double std_normal(std::span<const double> x, std::span<double> g) {
    double lp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lp -= 0.5 * x[i] * x[i];
        g[i] = -x[i];
    }
    return lp;
}

std::vector<Eigen::MatrixXd> fixture_chains(const nlohmann::json& row) {
    std::vector<Eigen::MatrixXd> chains;
    for (const auto& c : row["chains"]) chains.emplace_back(testing::to_vector(c));
    return chains;
}

}  // namespace

TEST_SUITE("hmc") {

TEST_CASE("split R-hat and bulk ESS match the reference implementation") {
    for (const auto& row : testing::load_fixture("rhat_ess.json")) {
        CAPTURE(row["name"].get<std::string>());
        const auto chains = fixture_chains(row);
        CHECK(hmc::split_rhat(chains)[0] == doctest::Approx(row["rhat"].get<double>()).epsilon(1e-10));
        CHECK(hmc::bulk_ess(chains)[0] == doctest::Approx(row["bulk_ess"].get<double>()).epsilon(1e-8));
    }
}

TEST_CASE("R-hat conventions") {
    std::vector<Eigen::MatrixXd> constant(4, Eigen::MatrixXd::Constant(100, 1, 2.5));
    CHECK(std::isinf(hmc::split_rhat(constant)[0]));

    Rng rng(1);
    std::vector<Eigen::MatrixXd> iid;
    for (int c = 0; c < 4; ++c) {
        Eigen::MatrixXd m(500, 1);
        for (int i = 0; i < 500; ++i) m(i, 0) = rng.normal();
        iid.push_back(m);
    }
    const double r = hmc::split_rhat(iid)[0];
    CHECK(r >= 0.99);
    CHECK(r <= 1.02);
    iid[2].array() += 10.0;
    CHECK(hmc::split_rhat(iid)[0] > 1.5);
}

TEST_CASE("leapfrog is time reversible") {
    const hmc::Target target = std_normal;
    Rng rng(2);
    Eigen::VectorXd q(5), p(5), g(5);
    for (int i = 0; i < 5; ++i) {
        q(i) = rng.normal();
        p(i) = rng.normal();
    }
    const Eigen::VectorXd q0 = q;
    const Eigen::VectorXd inv_mass = Eigen::VectorXd::LinSpaced(5, 0.5, 2.0);
    std_normal({q.data(), 5}, {g.data(), 5});
    hmc::leapfrog(target, q, p, g, inv_mass, 0.1, 37);
    p = -p;
    hmc::leapfrog(target, q, p, g, inv_mass, 0.1, 37);
    CHECK((q - q0).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("energy is nearly conserved at small step size") {
    const hmc::Target target = std_normal;
    Rng rng(3);
    Eigen::VectorXd q(10), p(10), g(10);
    for (int i = 0; i < 10; ++i) {
        q(i) = rng.normal();
        p(i) = rng.normal();
    }
    const Eigen::VectorXd unit = Eigen::VectorXd::Ones(10);
    double lp = std_normal({q.data(), 10}, {g.data(), 10});
    double h = hmc::hamiltonian(lp, p, unit);
    for (int s = 0; s < 200; ++s) {
        lp = hmc::leapfrog(target, q, p, g, unit, 0.01, 1);
        const double h1 = hmc::hamiltonian(lp, p, unit);
        CHECK(std::abs(h1 - h) < 1e-4);
        h = h1;
    }
}

TEST_CASE("fixed-step chain matches a 1-D Gaussian (Kolmogorov-Smirnov)") {
    hmc::HmcConfig cfg;
    cfg.n_chains = 1;
    cfg.n_warmup = 100;
    cfg.n_keep = 50000;
    cfg.adapt = false;
    cfg.step_size = 0.7;
    cfg.fixed_max_leapfrog = 4;
    cfg.seed = 11;
    const auto draws = hmc::run(std_normal, 1, cfg);
    std::vector<double> x(draws.draws.data(), draws.draws.data() + draws.draws.size());
    std::sort(x.begin(), x.end());
    const boost::math::normal_distribution<double> nd;
    double ks = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = boost::math::cdf(nd, x[i]);
        ks = std::max({ks, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    CHECK(ks < 0.02);
}

TEST_CASE("correlated 2-D Gaussian") {
    const double rho = 0.9;
    const double det = 1.0 - rho * rho;
    const hmc::Target target = [&](std::span<const double> x, std::span<double> g) {
        g[0] = -(x[0] - rho * x[1]) / det;
        g[1] = -(x[1] - rho * x[0]) / det;
        return -0.5 * (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / det;
    };
    hmc::HmcConfig cfg;
    cfg.seed = 21;
    const auto draws = hmc::run(target, 2, cfg);
    const Eigen::MatrixXd c = draws.draws.rowwise() - draws.draws.colwise().mean();
    const Eigen::Matrix2d cov = c.transpose() * c / static_cast<double>(c.rows() - 1);
    CHECK(std::abs(cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)) - rho) < 0.05);
    CHECK(draws.diagnostics.max_rhat() < 1.05);
}

TEST_CASE("flat target in a box terminates") {
    const hmc::Target target = [](std::span<const double> x, std::span<double> g) {
        g[0] = 0.0;
        return std::abs(x[0]) < 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    };
    hmc::HmcConfig cfg;
    cfg.n_chains = 2;
    cfg.n_warmup = 50;
    cfg.n_keep = 50;
    const auto start = std::chrono::steady_clock::now();
    try {
        const auto draws = hmc::run(target, 1, cfg, [](Rng& r) { return Eigen::VectorXd::Constant(1, r.uniform() - 0.5); });
        CHECK(draws.draws.cwiseAbs().maxCoeff() < 1.0);
    } catch (const Error&) {
        CHECK(true);
    }
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 20.0);
}

TEST_CASE("non-finite target at initialization") {
    const hmc::Target target = [](std::span<const double> x, std::span<double> g) {
        for (auto& v : g) v = 0.0;
        return x[1] > -100.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    hmc::HmcConfig cfg;
    cfg.n_chains = 1;
    try {
        hmc::run(target, 3, cfg);
        FAIL("expected InitializationError");
    } catch (const InitializationError& e) {
        CHECK(std::string(e.what()).find("non-finite target at initialization") != std::string::npos);
    }
}

TEST_CASE("identical seeds give bit-identical draws") {
    hmc::HmcConfig cfg;
    cfg.n_warmup = 100;
    cfg.n_keep = 100;
    cfg.seed = 99;
    const auto a = hmc::run(std_normal, 4, cfg);
    cfg.parallel_chains = false;
    const auto b = hmc::run(std_normal, 4, cfg);
    CHECK(a.draws == b.draws);
    CHECK(a.chain_id == b.chain_id);
    cfg.seed = 100;
    CHECK(hmc::run(std_normal, 4, cfg).draws != a.draws);
}

TEST_CASE("draw layout and diagnostics summary") {
    hmc::HmcConfig cfg;
    cfg.n_chains = 3;
    cfg.n_warmup = 60;
    cfg.n_keep = 40;
    const auto d = hmc::run(std_normal, 2, cfg);
    CHECK(d.size() == 120);
    CHECK(d.dimension() == 2);
    CHECK(d.chain_id.front() == 0);
    CHECK(d.chain_id.back() == 2);
    CHECK(d.chain(1) == d.draws.middleRows(40, 40));
    CHECK(d.diagnostics.split_rhat.size() == 2);
    CHECK(d.diagnostics.step_size.size() == 3);
    const auto s = d.diagnostics.summary();
    CHECK(s.contains("max_rhat"));
    CHECK(s.contains("min_bulk_ess"));
    CHECK(s.contains("divergences"));
}

TEST_CASE("config validation") {
    hmc::HmcConfig cfg;
    cfg.target_accept = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.n_keep = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

}
