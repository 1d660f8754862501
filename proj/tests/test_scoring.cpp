#include "bdarma/backtest.hpp"
#include "bdarma/dirichlet.hpp"
#include "bdarma/scoring.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace bdarma;
using namespace bdarma::scoring;

namespace {

Eigen::MatrixXd to_matrix(const nlohmann::json& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = testing::to_vector(rows[static_cast<std::size_t>(i)]).transpose();
    return m;
}

Fan fan_of(const Eigen::MatrixXd& draws) { return Fan{default_parts(static_cast<std::size_t>(draws.cols())), draws}; }

double naive_crps(const Fan& fan, const Composition& y) {
    const auto m = static_cast<double>(fan.size());
    double a = 0.0, b = 0.0;
    for (Eigen::Index i = 0; i < fan.draws.rows(); ++i) {
        a += (fan.draws.row(i).transpose() - y.shares()).cwiseAbs().sum();
        for (Eigen::Index k = 0; k < fan.draws.rows(); ++k) b += (fan.draws.row(i) - fan.draws.row(k)).cwiseAbs().sum();
    }
    return a / m - b / (2.0 * m * m);
}

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("hand-evaluated three-member fan") {
    const auto doc = testing::load_fixture("scoring.json");
    const Fan fan = fan_of(to_matrix(doc["toy"]["fan"]));
    const Composition y(fan.parts, testing::to_vector(doc["toy"]["truth"]));
    CHECK(crps_sample(fan, y) == doctest::Approx(doc["toy"]["crps"].get<double>()).epsilon(1e-14));
    CHECK(crps_sample(fan, y) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("CRPS, RMSE and coverage match the reference on random fans") {
    const auto doc = testing::load_fixture("scoring.json");
    for (const auto& c : doc["fans"]) {
        const Fan fan = fan_of(to_matrix(c["fan"]));
        const Composition y(fan.parts, testing::to_vector(c["truth"]));
        CHECK(std::abs(crps_sample(fan, y) - c["crps"].get<double>()) < 1e-12);
        CHECK(std::abs(aitchison_rmse(fan, y) - c["rmse"].get<double>()) < 1e-12);
        if (!c["covered"].is_null()) {
            const auto flags = interval_coverage(fan, y);
            for (std::size_t j = 0; j < flags.size(); ++j) CHECK(flags[j] == c["covered"][j].get<bool>());
        }
    }
    const auto& tp = doc["two_point"];
    const Fan two = fan_of(to_matrix(tp["fan"]));
    CHECK(aitchison_rmse(two, Composition(two.parts, testing::to_vector(tp["truth"]))) ==
          doctest::Approx(tp["rmse"].get<double>()).epsilon(1e-13));
}

TEST_CASE("type-7 quantiles match numpy") {
    const auto doc = testing::load_fixture("scoring.json");
    for (const auto& q : doc["quantiles"]) {
        std::vector<double> v;
        for (const auto& x : q["values"]) v.push_back(x.get<double>());
        CHECK(quantile_type7(v, q["prob"].get<double>()) == doctest::Approx(q["quantile"].get<double>()).epsilon(1e-14));
    }
    CHECK(quantile_type7({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
    CHECK(quantile_type7({5.0}, 0.3) == 5.0);
}

TEST_CASE("degenerate fans") {
    const auto parts = default_parts(4);
    const Composition truth = closure(parts, Eigen::Vector4d(1, 2, 3, 4));
    const Composition other = closure(parts, Eigen::Vector4d(2, 2, 3, 1));
    CHECK(crps_sample(Fan::degenerate(truth, 25), truth) == 0.0);
    CHECK(crps_sample(Fan::degenerate(other, 25), truth) == (other.shares() - truth.shares()).cwiseAbs().sum());
    CHECK(aitchison_rmse(Fan::degenerate(truth, 25), truth) < 1e-15);
    for (bool b : interval_coverage(Fan::degenerate(other, 25), truth)) CHECK(!b);
}

TEST_CASE("CRPS equals the naive double loop on 100 random fans") {
    Rng rng(12);
    const auto parts = default_parts(5);
    for (int i = 0; i < 100; ++i) {
        Fan fan{parts, Eigen::MatrixXd(50, 5)};
        for (int m = 0; m < 50; ++m) fan.draws.row(m) = testing::random_composition(parts, rng).shares().transpose();
        const Composition y = testing::random_composition(parts, rng);
        const double c = crps_sample(fan, y);
        CHECK(std::abs(c - naive_crps(fan, y)) < 1e-12);
        CHECK(c >= 0.0);
    }
}

TEST_CASE("CRPS is permutation invariant and decomposes over member blocks") {
    Rng rng(13);
    const auto parts = default_parts(7);
    Fan fan{parts, Eigen::MatrixXd(700, 7)};
    for (int m = 0; m < 700; ++m) fan.draws.row(m) = testing::random_composition(parts, rng).shares().transpose();
    const Composition y = testing::random_composition(parts, rng);
    const double c = crps_sample(fan, y);
    CHECK(std::abs(c - naive_crps(fan, y)) < 1e-12);

    std::vector<Eigen::Index> perm(700);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
    Fan shuffled{parts, Eigen::MatrixXd(700, 7)};
    for (Eigen::Index m = 0; m < 700; ++m) shuffled.draws.row(m) = fan.draws.row(perm[static_cast<std::size_t>(m)]);
    CHECK(std::abs(crps_sample(shuffled, y) - c) < 1e-12);

    const double full = pairwise_l1_sum(fan.draws, 0, 700, 0, 700);
    const double split = pairwise_l1_sum(fan.draws, 0, 300, 0, 700) + pairwise_l1_sum(fan.draws, 300, 700, 0, 300) +
                         pairwise_l1_sum(fan.draws, 300, 700, 300, 700);
    CHECK(std::abs(full - split) < 1e-12 * full);
}

TEST_CASE("coverage is monotone in level and calibrated for exchangeable truth") {
    Rng rng(14);
    const auto parts = default_parts(3);
    const dirichlet::Concentration alpha(Eigen::Vector3d(20, 30, 50));
    Fan fan{parts, Eigen::MatrixXd(400, 3)};
    long hits = 0, total = 0;
    for (int rep = 0; rep < 300; ++rep) {
        for (int m = 0; m < 400; ++m) fan.draws.row(m) = dirichlet::sample(alpha, parts, rng).shares().transpose();
        const Composition y = dirichlet::sample(alpha, parts, rng);
        const auto c80 = interval_coverage(fan, y, 0.8);
        const auto c90 = interval_coverage(fan, y, 0.9);
        for (std::size_t j = 0; j < 3; ++j) {
            if (c80[j]) CHECK(c90[j]);
            hits += c90[j];
            ++total;
        }
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(total);
    CHECK(rate > 0.87);
    CHECK(rate < 0.93);
}

TEST_CASE("aggregation matches the independent table") {
    const auto doc = testing::load_fixture("scoring.json")["aggregate"];
    std::vector<ScoreRecord> records;
    for (const auto& r : doc["records"]) {
        ScoreRecord rec;
        rec.model = r["model"].get<std::string>();
        rec.origin = YearMonth::parse(r["origin"].get<std::string>());
        rec.horizon = r["h"].get<int>();
        rec.crps = r["crps"].get<double>();
        rec.rmse = r["rmse"].get<double>();
        for (const auto& b : r["covered"]) rec.covered.push_back(b.get<bool>());
        records.push_back(rec);
    }
    const AggregateTable table = aggregate_by_horizon(records);
    CHECK(table.models == std::vector<std::string>{"bdarma", "tvar2", "snaive", "alrrw"});
    CHECK(table.horizons == std::vector<int>{1, 2});
    for (const auto& [key, cell] : doc["cells"].items()) {
        const std::string model = key.substr(0, key.find('|'));
        const int h = std::stoi(key.substr(key.find('|') + 1));
        const HorizonSummary& s = table.cells.at({model, h});
        CHECK(s.crps == doctest::Approx(cell["crps"].get<double>()).epsilon(1e-14));
        CHECK(s.rmse == doctest::Approx(cell["rmse"].get<double>()).epsilon(1e-14));
        CHECK(s.coverage == doctest::Approx(cell["coverage"].get<double>()).epsilon(1e-14));
        CHECK(s.count == cell["count"].get<std::size_t>());
    }
    for (const auto& [model, comp] : doc["component_coverage"].items()) {
        for (std::size_t j = 0; j < comp.size(); ++j) CHECK(table.component_coverage.at(model)[j] == doctest::Approx(comp[j].get<double>()));
        CHECK(table.overall_coverage.at(model) == doctest::Approx(doc["overall"][model].get<double>()));
    }

    // single record and midpoint cases
    const AggregateTable one = aggregate_by_horizon({records[0]});
    CHECK(one.cells.at({records[0].model, records[0].horizon}).crps == records[0].crps);
    ScoreRecord a = records[0], b = records[0];
    a.crps = 0.1;
    b.crps = 0.3;
    CHECK(aggregate_by_horizon({a, b}).cells.at({a.model, a.horizon}).crps == doctest::Approx(0.2).epsilon(1e-15));

    std::ostringstream csv, cov;
    write_aggregate_csv(csv, table);
    CHECK(csv.str().rfind("metric,h,bdarma,tvar2,snaive,alrrw\n", 0) == 0);
    write_component_coverage_csv(cov, table, {"a", "b", "c"});
    CHECK(cov.str().rfind("model,a,b,c,overall\n", 0) == 0);
    CHECK(format_aggregate_text(table).find("Mean CRPS") != std::string::npos);
}

TEST_CASE("score CSV round-trips exactly") {
    const auto doc = testing::load_fixture("scoring.json")["aggregate"];
    std::vector<ScoreRecord> records;
    Rng rng(15);
    for (const auto& r : doc["records"]) {
        ScoreRecord rec{r["model"].get<std::string>(), YearMonth::parse(r["origin"].get<std::string>()), r["h"].get<int>(),
                        rng.uniform() / 3.0, rng.uniform() * 1e-7, {}};
        for (const auto& b : r["covered"]) rec.covered.push_back(b.get<bool>());
        records.push_back(rec);
    }
    std::stringstream buf;
    write_scores_csv(buf, records);
    CHECK(buf.str().rfind("model,origin,h,crps,rmse,covered_1,covered_2,covered_3\n", 0) == 0);
    const auto back = read_scores_csv(buf);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].model == records[i].model);
        CHECK(back[i].origin == records[i].origin);
        CHECK(back[i].horizon == records[i].horizon);
        CHECK(back[i].crps == records[i].crps);
        CHECK(back[i].rmse == records[i].rmse);
        CHECK(back[i].covered == records[i].covered);
    }
}

TEST_CASE("naive benchmark scores match the independent script end to end") {
    const auto doc = testing::load_fixture("scoring.json")["naive"];
    const Eigen::MatrixXd shares = to_matrix(doc["shares"]);
    const YearMonth start = YearMonth::parse(doc["start"].get<std::string>());
    const CompositionalSeries series(default_parts(3), start, shares, 1);
    backtest::ProtocolSpec spec;
    spec.first_origin = start.plus_months(doc["origin_rows"].front().get<int>());
    spec.last_origin = start.plus_months(doc["origin_rows"].back().get<int>());
    spec.horizon = doc["horizon"].get<int>();
    spec.fan_size = doc["fan_size"].get<std::size_t>();
    spec.models = {"alrrw", "snaive"};
    backtest::ModelConfig config;
    config.fourier = FourierSpec(12, 2);
    const auto result = backtest::run_rolling(spec, series, config);
    REQUIRE(result.ok());
    REQUIRE(result.records.size() == doc["scores"].size());
    for (const auto& expected : doc["scores"]) {
        const YearMonth origin = start.plus_months(expected["origin_row"].get<int>());
        const auto it = std::find_if(result.records.begin(), result.records.end(), [&](const ScoreRecord& r) {
            return r.model == expected["model"].get<std::string>() && r.origin == origin && r.horizon == expected["h"].get<int>();
        });
        REQUIRE(it != result.records.end());
        CHECK(std::abs(it->crps - expected["crps"].get<double>()) < 1e-15);
        CHECK(std::abs(it->crps - expected["crps_loops"].get<double>()) < 1e-12);
        CHECK(std::abs(it->rmse - expected["rmse"].get<double>()) < 1e-12);
        for (std::size_t j = 0; j < 3; ++j) CHECK(it->covered[j] == expected["covered"][j].get<bool>());
    }
}

}
