#pragma once

#include "bdarma/calendar.hpp"
#include "bdarma/fan.hpp"
#include "bdarma/simplex.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bdarma::scoring {

struct ScoreRecord {
    std::string model;
    YearMonth origin;
    int horizon = 1;
    double crps = 0.0;
    double rmse = 0.0;
    std::vector<bool> covered;  // one flag per component
};

// Sample CRPS with l1 distances:
//   (1/M) sum_m |y_m - y|_1 - (1/(2 M^2)) sum_m sum_m' |y_m - y_m'|_1
// The double sum is exact (every pair), accumulated block by block.
double crps_sample(const Fan& fan, const Composition& truth);

// sum_{a in A} sum_{b in B} |a - b|_1 for fan rows [a_begin, a_end) x
// [b_begin, b_end). Building block of the CRPS spread term.
double pairwise_l1_sum(const Eigen::MatrixXd& draws, Eigen::Index a_begin, Eigen::Index a_end,
                       Eigen::Index b_begin, Eigen::Index b_end);

// Aitchison RMSE between the truth and the (re-closed) arithmetic fan mean.
double aitchison_rmse(const Fan& fan, const Composition& truth);

// Type-7 sample quantile (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double prob);

// Per component: truth inside the central `level` interval of the fan
// (type-7 quantiles at (1-level)/2 and (1+level)/2).
std::vector<bool> interval_coverage(const Fan& fan, const Composition& truth, double level = 0.9);

struct HorizonSummary {
    double crps = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;  // mean over records and components
    std::size_t count = 0;
};

struct AggregateTable {
    std::vector<std::string> models;  // in first-seen order
    std::vector<int> horizons;        // ascending
    std::map<std::pair<std::string, int>, HorizonSummary> cells;
    std::map<std::string, std::vector<double>> component_coverage;  // per model
    std::map<std::string, double> overall_coverage;                 // per model
};

AggregateTable aggregate_by_horizon(const std::vector<ScoreRecord>& records);

// CSV with columns model,origin,h,crps,rmse,covered_1..covered_J. Reals are
// written with 17 significant digits so the file round-trips exactly.
void write_scores_csv(std::ostream& out, const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> read_scores_csv(std::istream& in);


// Horizon table, one row per (metric, h) and one column per model:
// metric,h,<model>,...  with metric in {crps, rmse, coverage}.
void write_aggregate_csv(std::ostream& out, const AggregateTable& table);
std::string format_aggregate_text(const AggregateTable& table);

// model,<label>,...,overall
void write_component_coverage_csv(std::ostream& out, const AggregateTable& table,
                                  const std::vector<std::string>& labels);

}  // namespace bdarma::scoring
