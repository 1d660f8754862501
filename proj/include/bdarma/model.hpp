#pragma once

#include "bdarma/fan.hpp"
#include "bdarma/hmc.hpp"
#include "bdarma/rng.hpp"
#include "bdarma/seasonal.hpp"
#include "bdarma/series.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bdarma {

// Log-precision values are clamped to this range before exponentiation.
inline constexpr double kLogPrecisionClamp = 500.0;

// One point in BDARMA parameter space.
//
// Flat packing order (frozen; every file format uses it):
//   A1 row-major (n x n), A2 row-major (n x n), beta (n blocks of 1+2K,
//   block j holding coordinate j's seasonal coefficients), gamma (1+2K).
// n = J - 1 is the number of ALR coordinates.
struct BdarmaParams {
    Eigen::MatrixXd a1;
    Eigen::MatrixXd a2;
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;

    static BdarmaParams zeros(int n_coords, const FourierSpec& spec);
    static BdarmaParams unpack(std::span<const double> theta, int n_coords, const FourierSpec& spec);
    static BdarmaParams unpack(const Eigen::VectorXd& theta, int n_coords, const FourierSpec& spec) {
        return unpack(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())), n_coords, spec);
    }
    Eigen::VectorXd pack() const;

    int n_coords() const { return static_cast<int>(a1.rows()); }
    std::size_t dimension() const;
};

// 2 n^2 + n (1+2K) + (1+2K)
std::size_t parameter_dimension(int n_coords, const FourierSpec& spec);

// Column names in packing order: A1[i,j], A2[i,j], beta[j,k], gamma[k],
// with 1-based indices.
std::vector<std::string> parameter_names(int n_coords, const FourierSpec& spec);

// Observed series in ALR coordinates plus the harmonic design rows at the
// series' global month indices.
class ModelData {
public:
    ModelData(CompositionalSeries series, FourierSpec spec);

    const CompositionalSeries& series() const { return series_; }
    const FourierSpec& spec() const { return spec_; }
    std::size_t size() const { return series_.size(); }
    int n_coords() const { return static_cast<int>(series_.n_parts()) - 1; }

    // T x (J-1) ALR coordinates and T x J log shares.
    const Eigen::MatrixXd& alr() const { return alr_; }
    const Eigen::MatrixXd& log_shares() const { return log_shares_; }
    // T x (1+2K) design rows.
    const Eigen::MatrixXd& design() const { return design_; }
    DesignRow design_row(std::size_t row) const;

private:
    CompositionalSeries series_;
    FourierSpec spec_;
    Eigen::MatrixXd alr_;
    Eigen::MatrixXd log_shares_;
    Eigen::MatrixXd design_;
};

// phi = exp(dot(f, gamma)), with the exponent clamped to +-500.
double precision_at(const Eigen::VectorXd& gamma, const DesignRow& row, bool* clamped = nullptr);

// eta_t = X_t beta + A1 (e_{t-1} - X_{t-1} beta) + A2 (e_{t-2} - X_{t-2} beta)
// with observed e. t is 1-based within the data and must be >= 3.
AlrVector mean_recursion(const BdarmaParams& params, const ModelData& data, int t);

// Joint log posterior (Dirichlet likelihood over t = 3..T plus independent
// standard-normal priors including their normalizing constant) and its
// gradient. The object is immutable apart from the clamp counter, so it can
// be shared between sampler threads.
class BdarmaPosterior {
public:
    explicit BdarmaPosterior(std::shared_ptr<const ModelData> data);

    std::size_t dimension() const { return dimension_; }
    const ModelData& data() const { return *data_; }

    double log_posterior(std::span<const double> theta) const;
    // Writes the gradient into `grad` and returns the log posterior.
    double log_posterior_and_gradient(std::span<const double> theta, std::span<double> grad) const;

    double log_posterior(const Eigen::VectorXd& theta) const {
        return log_posterior(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
    }
    double log_posterior_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
        grad.resize(theta.size());
        return log_posterior_and_gradient(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())),
                                          std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
    }

    // Number of (t, evaluation) pairs where the log precision was clamped.
    long clamp_events() const { return clamp_events_.load(); }

    hmc::Target target() const;

private:
    double evaluate(std::span<const double> theta, double* grad) const;

    std::shared_ptr<const ModelData> data_;
    std::size_t dimension_;
    mutable std::atomic<long> clamp_events_{0};
};

double log_posterior(const BdarmaParams& params, const ModelData& data);
Eigen::VectorXd grad_log_posterior(const BdarmaParams& params, const ModelData& data);

// Starting point: beta from per-coordinate least-squares seasonal
// regressions, gamma intercept from a moment-matched global precision, every
// other entry N(0, 0.1^2).
Eigen::VectorXd initial_point(const ModelData& data, Rng& rng);

struct BdarmaFit {
    hmc::PosteriorDraws posterior;
    long clamp_events = 0;
};

BdarmaFit fit_bdarma(const ModelData& data, const hmc::HmcConfig& config);

// Predictive fan for h = 1..H. Draw m uses posterior row (m mod n_draws);
// eta is propagated deterministically (observed residuals up to T, computed
// eta afterwards) and one Dirichlet realization is drawn per member.
ForecastFan forecast_fan(const hmc::PosteriorDraws& draws, const ModelData& data, int horizon,
                         std::size_t fan_size, Rng& rng);

// Synthetic series of length T from the model. Rows 1-2 sit at X_t beta; rows
// 3..T are Dirichlet draws around the observation-driven recursion.
CompositionalSeries simulate_series(const BdarmaParams& params, int length, const PartSetPtr& parts,
                                    const FourierSpec& spec, YearMonth start, Rng& rng);

}  // namespace bdarma
