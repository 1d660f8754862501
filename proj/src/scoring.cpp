#include "bdarma/scoring.hpp"

#include "bdarma/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace bdarma::scoring {

namespace {

constexpr Eigen::Index kBlock = 256;

void check_fan(const Fan& fan, const Composition& truth) {
    if (fan.size() == 0) throw DomainError("empty forecast fan");
    if (fan.n_parts() != truth.size()) {
        throw IncompatibleComposition("fan and truth have different numbers of parts");
    }
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double pairwise_l1_sum(const Eigen::MatrixXd& draws, Eigen::Index a_begin, Eigen::Index a_end,
                       Eigen::Index b_begin, Eigen::Index b_end) {
    const Eigen::Index j_len = draws.cols();
    double total = 0.0;
    for (Eigen::Index a = a_begin; a < a_end; ++a) {
        double row = 0.0;
        for (Eigen::Index b = b_begin; b < b_end; ++b) {
            double d = 0.0;
            for (Eigen::Index j = 0; j < j_len; ++j) d += std::fabs(draws(a, j) - draws(b, j));
            row += d;
        }
        total += row;
    }
    return total;
}

double crps_sample(const Fan& fan, const Composition& truth) {
    check_fan(fan, truth);
    const Eigen::MatrixXd& draws = fan.draws;
    const Eigen::Index m = draws.rows();
    const double md = static_cast<double>(m);

    // Point-mass fan: the score is the l1 distance itself, returned without
    // the rounding of summing M copies.
    if ((draws.rowwise() - draws.row(0)).cwiseAbs().maxCoeff() == 0.0) {
        const Eigen::VectorXd point = draws.row(0).transpose();  // contiguous, same reduction as a plain vector
        return (point - truth.shares()).cwiseAbs().sum();
    }

    double accuracy = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        double d = 0.0;
        for (Eigen::Index j = 0; j < draws.cols(); ++j) d += std::fabs(draws(i, j) - truth[static_cast<std::size_t>(j)]);
        accuracy += d;
    }

    // Symmetric double sum: diagonal blocks once, off-diagonal blocks twice.
    double spread = 0.0;
    for (Eigen::Index a = 0; a < m; a += kBlock) {
        const Eigen::Index a_end = std::min(m, a + kBlock);
        spread += pairwise_l1_sum(draws, a, a_end, a, a_end);
        for (Eigen::Index b = a_end; b < m; b += kBlock) {
            spread += 2.0 * pairwise_l1_sum(draws, a, a_end, b, std::min(m, b + kBlock));
        }
    }
    return accuracy / md - spread / (2.0 * md * md);
}

double aitchison_rmse(const Fan& fan, const Composition& truth) {
    check_fan(fan, truth);
    const Eigen::VectorXd mean = fan.draws.colwise().mean().transpose();
    return aitchison_rmse_distance(truth, closure(fan.parts, mean));
}

namespace {

double quantile_sorted(const std::vector<double>& values, double prob) {
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

double quantile_type7(std::vector<double> values, double prob) {
    if (values.empty()) throw DomainError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, prob);
}

std::vector<bool> interval_coverage(const Fan& fan, const Composition& truth, double level) {
    check_fan(fan, truth);
    if (!(level > 0.0 && level < 1.0)) throw DomainError("coverage level must lie in (0, 1)");
    const double lo_p = 0.5 * (1.0 - level);
    const double hi_p = 0.5 * (1.0 + level);
    std::vector<bool> covered(fan.n_parts());
    std::vector<double> column(fan.size());
    for (std::size_t j = 0; j < fan.n_parts(); ++j) {
        for (std::size_t m = 0; m < fan.size(); ++m) {
            column[m] = fan.draws(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j));
        }
        std::sort(column.begin(), column.end());
        const double lo = quantile_sorted(column, lo_p);
        const double hi = quantile_sorted(column, hi_p);
        covered[j] = truth[j] >= lo && truth[j] <= hi;
    }
    return covered;
}

AggregateTable aggregate_by_horizon(const std::vector<ScoreRecord>& records) {
    if (records.empty()) throw DomainError("nothing to aggregate");
    AggregateTable table;
    std::map<std::string, std::vector<double>> comp_sum;
    std::map<std::string, std::size_t> comp_count;
    for (const auto& r : records) {
        if (std::find(table.models.begin(), table.models.end(), r.model) == table.models.end()) {
            table.models.push_back(r.model);
        }
        if (std::find(table.horizons.begin(), table.horizons.end(), r.horizon) == table.horizons.end()) {
            table.horizons.push_back(r.horizon);
        }
        auto& cell = table.cells[{r.model, r.horizon}];
        cell.crps += r.crps;
        cell.rmse += r.rmse;
        double hit = 0.0;
        for (bool c : r.covered) hit += c ? 1.0 : 0.0;
        cell.coverage += r.covered.empty() ? 0.0 : hit / static_cast<double>(r.covered.size());
        cell.count += 1;

        auto& sums = comp_sum[r.model];
        if (sums.empty()) sums.assign(r.covered.size(), 0.0);
        if (sums.size() != r.covered.size()) throw DomainError("records disagree on component count");
        for (std::size_t j = 0; j < r.covered.size(); ++j) sums[j] += r.covered[j] ? 1.0 : 0.0;
        comp_count[r.model] += 1;
    }
    std::sort(table.horizons.begin(), table.horizons.end());
    for (auto& [key, cell] : table.cells) {
        const double n = static_cast<double>(cell.count);
        cell.crps /= n;
        cell.rmse /= n;
        cell.coverage /= n;
    }
    for (auto& [model, sums] : comp_sum) {
        const double n = static_cast<double>(comp_count[model]);
        double overall = 0.0;
        for (double& s : sums) {
            s /= n;
            overall += s;
        }
        table.component_coverage[model] = sums;
        table.overall_coverage[model] = sums.empty() ? 0.0 : overall / static_cast<double>(sums.size());
    }
    return table;
}

void write_scores_csv(std::ostream& out, const std::vector<ScoreRecord>& records) {
    const std::size_t j_len = records.empty() ? 0 : records.front().covered.size();
    out << "model,origin,h,crps,rmse";
    for (std::size_t j = 1; j <= j_len; ++j) out << ",covered_" << j;
    out << '\n';
    for (const auto& r : records) {
        out << r.model << ',' << r.origin.to_string() << ',' << r.horizon << ',' << format_real(r.crps)
            << ',' << format_real(r.rmse);
        for (bool c : r.covered) out << ',' << (c ? 1 : 0);
        out << '\n';
    }
}

std::vector<ScoreRecord> read_scores_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("score file is empty");
    std::size_t header_cols = 1;
    for (char ch : line) header_cols += ch == ',' ? 1 : 0;
    if (line.rfind("model,origin,h,crps,rmse", 0) != 0) throw ParseError("unexpected score header");
    std::vector<ScoreRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header_cols) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header_cols) + " columns");
        }
        ScoreRecord r;
        r.model = cells[0];
        r.origin = YearMonth::parse(cells[1]);
        r.horizon = std::stoi(cells[2]);
        r.crps = std::stod(cells[3]);
        r.rmse = std::stod(cells[4]);
        for (std::size_t j = 5; j < cells.size(); ++j) r.covered.push_back(cells[j] == "1");
        records.push_back(std::move(r));
    }
    return records;
}


void write_aggregate_csv(std::ostream& out, const AggregateTable& table) {
    out << "metric,h";
    for (const auto& m : table.models) out << ',' << m;
    out << '\n';
    const std::pair<const char*, double HorizonSummary::*> metrics[] = {
        {"crps", &HorizonSummary::crps}, {"rmse", &HorizonSummary::rmse}, {"coverage", &HorizonSummary::coverage}};
    for (const auto& [name, member] : metrics) {
        for (int h : table.horizons) {
            out << name << ',' << h;
            for (const auto& m : table.models) {
                const auto it = table.cells.find({m, h});
                out << ',';
                if (it != table.cells.end()) out << format_real(it->second.*member);
            }
            out << '\n';
        }
    }
}

std::string format_aggregate_text(const AggregateTable& table) {
    std::ostringstream out;
    char buf[64];
    const std::pair<const char*, double HorizonSummary::*> metrics[] = {
        {"Mean CRPS", &HorizonSummary::crps},
        {"Mean Aitchison RMSE", &HorizonSummary::rmse},
        {"90% interval coverage", &HorizonSummary::coverage}};
    for (const auto& [title, member] : metrics) {
        out << title << '\n';
        std::snprintf(buf, sizeof buf, "%4s", "h");
        out << buf;
        for (const auto& m : table.models) {
            std::snprintf(buf, sizeof buf, " %10s", m.c_str());
            out << buf;
        }
        out << '\n';
        for (int h : table.horizons) {
            std::snprintf(buf, sizeof buf, "%4d", h);
            out << buf;
            for (const auto& m : table.models) {
                const auto it = table.cells.find({m, h});
                if (it == table.cells.end()) {
                    std::snprintf(buf, sizeof buf, " %10s", "-");
                } else {
                    std::snprintf(buf, sizeof buf, " %10.5f", it->second.*member);
                }
                out << buf;
            }
            out << '\n';
        }
        out << '\n';
    }
    return out.str();
}

void write_component_coverage_csv(std::ostream& out, const AggregateTable& table,
                                  const std::vector<std::string>& labels) {
    out << "model";
    for (const auto& l : labels) out << ',' << l;
    out << ",overall\n";
    for (const auto& m : table.models) {
        out << m;
        const auto it = table.component_coverage.find(m);
        for (std::size_t j = 0; j < labels.size(); ++j) {
            out << ',';
            if (it != table.component_coverage.end() && j < it->second.size()) out << format_real(it->second[j]);
        }
        const auto ov = table.overall_coverage.find(m);
        out << ',' << (ov != table.overall_coverage.end() ? format_real(ov->second) : std::string());
        out << '\n';
    }
}

}  // namespace bdarma::scoring
