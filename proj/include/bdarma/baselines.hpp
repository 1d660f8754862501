#pragma once

#include "bdarma/fan.hpp"
#include "bdarma/model.hpp"
#include "bdarma/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <string>
#include <vector>

namespace bdarma::baselines {

// Least-squares VAR(order) in ALR coordinates with optional harmonic
// regressors:
//   e_t = F_1 e_{t-1} + ... + F_order e_{t-order} + delta_j' f_t + eps_t
// When `seasonal` is false the regressor row is the intercept alone.
struct VarFit {
    int order = 2;
    bool seasonal = true;
    std::vector<Eigen::MatrixXd> lag_coefficients;  // F_1..F_order, n x n
    Eigen::MatrixXd delta;       // n x (regressor row length), row j for coordinate j
    Eigen::MatrixXd sigma;       // n x n innovation covariance
    Eigen::MatrixXd residuals;   // (T - order) x n
    int regressors_per_equation = 0;
    int first_fitted_row = 0;    // 0-based data row of residuals.row(0)

    nlohmann::json to_json() const;
};

// tVAR(2): the order-2 seasonal fit.
using TvarFit = VarFit;

VarFit fit_var(const ModelData& data, int order, bool seasonal);
TvarFit fit_tvar2(const ModelData& data);

// Regressor matrix used by fit_var (rows t = order..T-1), exposed for the
// orthogonality checks.
Eigen::MatrixXd var_regressors(const ModelData& data, int order, bool seasonal);

// h-step Gaussian forecast moments for h = 1..H.
struct GaussianForecast {
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::MatrixXd> covariance;
};

// Mean by recursion on observed history; covariance
// V_h = sum_{i<h} Psi_i Sigma Psi_i' with Psi from the companion recursion.
GaussianForecast var_forecast_moments(const VarFit& fit, const ModelData& data, int horizon);

ForecastFan tvar2_fan(const TvarFit& fit, const ModelData& data, int horizon, std::size_t fan_size,
                      Rng& rng);

// Degenerate fans: every member at alr_inv(e_T).
ForecastFan alr_rw_fan(const ModelData& data, int horizon, std::size_t fan_size);

// Seasonal naive: fan at horizon h holds copies of the composition 12 months
// before the target month (origin_row + h - 12, wrapping back by further
// years for h > 12). origin_row is the 0-based row of the last estimation
// month and must be >= 11 (twelve months of history).
ForecastFan snaive_fan(const CompositionalSeries& series, std::size_t origin_row, int horizon,
                       std::size_t fan_size, int period = 12);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
};

// Ljung-Box Q over lags 1..lags, chi-square(lags) reference.
TestResult ljung_box(const Eigen::VectorXd& residuals, int lags);

// Hosking multivariate portmanteau over lags 1..max_lag with
// chi-square(d^2 max_lag - fitted_params) reference.
TestResult hosking_portmanteau(const Eigen::MatrixXd& residuals, int max_lag, int fitted_params = 0);

// Upper tail of the chi-square distribution.
double chi_square_upper_tail(double statistic, double dof);


// Residual diagnostics for one VAR specification.
struct DiagnosticRow {
    int order = 1;
    bool seasonal = false;
    std::vector<TestResult> ljung_box;  // one per ALR coordinate
    TestResult hosking;                 // df = d^2 * max_lag
    TestResult hosking_adjusted;        // df reduced by d^2 * order
};

struct DiagnosticReport {
    int ljung_box_lags = 2;
    int hosking_lag = 12;
    std::vector<DiagnosticRow> rows;  // VAR(1), VAR(2); each without then with harmonics

    nlohmann::json to_json() const;
    std::string to_text(const std::vector<std::string>& coord_labels) const;
};

DiagnosticReport diagnose(const ModelData& data, int ljung_box_lags = 2, int hosking_lag = 12);

}  // namespace bdarma::baselines
