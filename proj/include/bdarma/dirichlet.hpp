#pragma once

#include "bdarma/rng.hpp"
#include "bdarma/simplex.hpp"

#include <Eigen/Dense>

#include <span>

namespace bdarma::dirichlet {

// Concentration vector alpha (= phi * mu in the model); every entry positive
// and finite.
class Concentration {
public:
    explicit Concentration(Eigen::VectorXd alpha);

    const Eigen::VectorXd& alpha() const { return alpha_; }
    std::size_t size() const { return static_cast<std::size_t>(alpha_.size()); }
    double total() const { return alpha_.sum(); }

private:
    Eigen::VectorXd alpha_;
};

// log Gamma(sum alpha) - sum log Gamma(alpha_j) + sum (alpha_j - 1) log y_j
double log_density(const Composition& y, const Concentration& alpha);

// d/d alpha_j: psi(sum alpha) - psi(alpha_j) + log y_j
Eigen::VectorXd grad_log_density_alpha(const Composition& y, const Concentration& alpha);

// Draws Gamma(alpha_j, 1) variates and normalizes them.
Composition sample(const Concentration& alpha, const PartSetPtr& parts, Rng& rng);

// Gamma(shape, 1) variate. Marsaglia-Tsang squeeze for shape >= 1; for
// shape < 1 draws at shape + 1 and multiplies by U^(1/shape).
double sample_gamma(double shape, Rng& rng);

namespace detail {

// Unchecked kernels: log_y holds log(y_j).
double log_density(std::span<const double> log_y, std::span<const double> alpha);
void sample_into(std::span<const double> alpha, Rng& rng, std::span<double> out);

}  // namespace detail

}  // namespace bdarma::dirichlet
