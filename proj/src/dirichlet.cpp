#include "bdarma/dirichlet.hpp"

#include "bdarma/errors.hpp"
#include "bdarma/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace bdarma::dirichlet {

Concentration::Concentration(Eigen::VectorXd alpha) : alpha_(std::move(alpha)) {
    if (alpha_.size() < 2) throw DomainError("Dirichlet needs at least two components");
    for (Eigen::Index j = 0; j < alpha_.size(); ++j) {
        if (!(alpha_(j) > 0.0) || !std::isfinite(alpha_(j))) {
            throw DomainError("concentration entries must be positive and finite");
        }
    }
}

namespace {

void check_pair(const Composition& y, const Concentration& alpha) {
    if (y.size() != alpha.size()) {
        throw DomainError("composition has " + std::to_string(y.size()) +
                          " parts, concentration has " + std::to_string(alpha.size()));
    }
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (!(y[j] > 0.0 && y[j] < 1.0)) throw DomainError("composition is not interior to the simplex");
    }
}

}  // namespace

namespace detail {

double log_density(std::span<const double> log_y, std::span<const double> alpha) {
    double total = 0.0;
    double value = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        total += alpha[j];
        value += (alpha[j] - 1.0) * log_y[j] - special::log_gamma(alpha[j]);
    }
    return value + special::log_gamma(total);
}

void sample_into(std::span<const double> alpha, Rng& rng, std::span<double> out) {
    double total = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        out[j] = sample_gamma(alpha[j], rng);
        total += out[j];
    }
    if (!(total > 0.0)) {
        // Every gamma variate underflowed (all alpha tiny); fall back to the
        // largest-alpha vertex neighbourhood rather than dividing by zero.
        const auto best = static_cast<std::size_t>(
            std::max_element(alpha.begin(), alpha.end()) - alpha.begin());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = (j == best) ? 1.0 : 0.0;
        total = 1.0;
    }
    for (double& v : out) {
        v /= total;
        v = std::max(v, std::numeric_limits<double>::min());
    }
}

}  // namespace detail

double log_density(const Composition& y, const Concentration& alpha) {
    check_pair(y, alpha);
    std::vector<double> log_y(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) log_y[j] = std::log(y[j]);
    return detail::log_density(log_y, {alpha.alpha().data(), alpha.size()});
}

Eigen::VectorXd grad_log_density_alpha(const Composition& y, const Concentration& alpha) {
    check_pair(y, alpha);
    const double psi_total = special::digamma(alpha.total());
    Eigen::VectorXd grad(alpha.alpha().size());
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
        grad(j) = psi_total - special::digamma(alpha.alpha()(j)) +
                  std::log(y[static_cast<std::size_t>(j)]);
    }
    return grad;
}

double sample_gamma(double shape, Rng& rng) {
    if (shape < 1.0) {
        const double boost = std::pow(rng.uniform(), 1.0 / shape);
        return sample_gamma(shape + 1.0, rng) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0, v = 0.0;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

Composition sample(const Concentration& alpha, const PartSetPtr& parts, Rng& rng) {
    if (parts->size() != alpha.size()) throw DomainError("parts and concentration sizes differ");
    Eigen::VectorXd out(alpha.alpha().size());
    detail::sample_into({alpha.alpha().data(), alpha.size()}, rng,
                        {out.data(), static_cast<std::size_t>(out.size())});
    out /= out.sum();
    return Composition(parts, std::move(out));
}

}  // namespace bdarma::dirichlet
