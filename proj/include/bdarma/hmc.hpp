#pragma once

#include "bdarma/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bdarma::hmc {

// Log density plus gradient. Writes the gradient into `grad` (same length as
// `x`) and returns the log density. Must be safe to call concurrently.
using Target = std::function<double(std::span<const double> x, std::span<double> grad)>;

// Produces a chain's starting point.
using Initializer = std::function<Eigen::VectorXd(Rng&)>;

struct HmcConfig {
    int n_chains = 4;
    int n_warmup = 500;
    int n_keep = 500;
    double target_accept = 0.8;
    int max_leapfrog = 256;
    std::uint64_t seed = 1;

    // When false the sampler skips all adaptation and uses `step_size`, a unit
    // mass matrix and `fixed_max_leapfrog`. Used for integrator checks.
    bool adapt = true;
    double step_size = 0.0;  // 0: choose heuristically
    int fixed_max_leapfrog = 0;
    bool parallel_chains = true;

    // Optional warm start for the adapted diagonal inverse mass (empty: unit).
    Eigen::VectorXd initial_inverse_mass;

    void validate() const;
};

struct ChainDiagnostics {
    std::vector<double> split_rhat;
    std::vector<double> bulk_ess;
    int divergences = 0;           // post-warmup
    int warmup_divergences = 0;
    double mean_accept = 0.0;      // post-warmup, over all chains
    std::vector<double> step_size; // per chain, adapted
    std::vector<Eigen::VectorXd> inverse_mass;  // per chain, adapted diagonal
    std::vector<int> max_leapfrog;  // per chain, adapted L

    double max_rhat() const;
    double min_ess() const;
    nlohmann::json summary() const;
};

// n_chains x n_keep draws of a D-dimensional target. Row i belongs to chain
// chain_id[i]; rows are grouped by chain in ascending chain order.
struct PosteriorDraws {
    Eigen::MatrixXd draws;
    std::vector<int> chain_id;
    ChainDiagnostics diagnostics;

    std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
    std::size_t dimension() const { return static_cast<std::size_t>(draws.cols()); }
    // Draws of chain c as an n_keep x D matrix.
    Eigen::MatrixXd chain(int c) const;
};

// Adaptive HMC: dual-averaging step size, windowed diagonal mass matrix,
// path length jittered uniformly in [1, L_adapted]. Divergent transitions
// (energy error above 1000 or non-finite) keep the previous state.
PosteriorDraws run(const Target& target, std::size_t dimension, const HmcConfig& config,
                   const Initializer& init = {});

// Split potential scale reduction per dimension. `chains` holds one
// (draws x D) matrix per chain. Zero-variance dimensions report +inf.
std::vector<double> split_rhat(const std::vector<Eigen::MatrixXd>& chains);

// Rank-normalized bulk effective sample size per dimension.
std::vector<double> bulk_ess(const std::vector<Eigen::MatrixXd>& chains);

// Leapfrog integration of `steps` steps with a diagonal inverse mass.
// Updates position, momentum and gradient in place; returns the final log
// density (or -inf / NaN if the trajectory left the support).
double leapfrog(const Target& target, Eigen::VectorXd& position, Eigen::VectorXd& momentum,
                Eigen::VectorXd& gradient, const Eigen::VectorXd& inverse_mass, double step_size,
                int steps);

// Hamiltonian: -log p(q) + 0.5 p' M^{-1} p
double hamiltonian(double log_density, const Eigen::VectorXd& momentum,
                   const Eigen::VectorXd& inverse_mass);

}  // namespace bdarma::hmc
