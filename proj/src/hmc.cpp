#include "bdarma/hmc.hpp"

#include "bdarma/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

namespace bdarma::hmc {

void HmcConfig::validate() const {
    if (n_chains < 1 || n_warmup < 0 || n_keep < 1 || max_leapfrog < 1) {
        throw DomainError("HMC counts must be at least one");
    }
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
        throw DomainError("target_accept must lie in (0, 1)");
    }
    if (!adapt && !(step_size > 0.0)) throw DomainError("non-adaptive HMC needs a step size");
}

double ChainDiagnostics::max_rhat() const {
    double worst = 0.0;
    for (double r : split_rhat) worst = std::max(worst, r);
    return worst;
}

double ChainDiagnostics::min_ess() const {
    double best = std::numeric_limits<double>::infinity();
    for (double e : bulk_ess) best = std::min(best, e);
    return best;
}

nlohmann::json ChainDiagnostics::summary() const {
    double min_rhat = std::numeric_limits<double>::infinity();
    for (double r : split_rhat) min_rhat = std::min(min_rhat, r);
    auto finite_or_null = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    return {
        {"max_rhat", finite_or_null(max_rhat())},
        {"min_rhat", finite_or_null(min_rhat)},
        {"min_bulk_ess", finite_or_null(min_ess())},
        {"divergences", divergences},
        {"warmup_divergences", warmup_divergences},
        {"mean_accept", mean_accept},
        {"step_size", step_size},
        {"max_leapfrog", max_leapfrog},
    };
}

Eigen::MatrixXd PosteriorDraws::chain(int c) const {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < chain_id.size(); ++i) {
        if (chain_id[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), draws.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = draws.row(rows[i]);
    return out;
}

double hamiltonian(double log_density, const Eigen::VectorXd& momentum,
                   const Eigen::VectorXd& inverse_mass) {
    return -log_density + 0.5 * momentum.cwiseProduct(momentum).dot(inverse_mass);
}

double leapfrog(const Target& target, Eigen::VectorXd& position, Eigen::VectorXd& momentum,
                Eigen::VectorXd& gradient, const Eigen::VectorXd& inverse_mass, double step_size,
                int steps) {
    const auto d = static_cast<std::size_t>(position.size());
    double log_density = std::numeric_limits<double>::quiet_NaN();
    momentum += 0.5 * step_size * gradient;
    for (int s = 0; s < steps; ++s) {
        position += step_size * inverse_mass.cwiseProduct(momentum);
        log_density = target({position.data(), d}, {gradient.data(), d});
        if (!std::isfinite(log_density) || !gradient.allFinite()) return log_density;
        momentum += (s + 1 == steps ? 0.5 : 1.0) * step_size * gradient;
    }
    return log_density;
}

namespace {

constexpr double kDivergenceThreshold = 1000.0;

struct ChainResult {
    Eigen::MatrixXd draws;
    int divergences = 0;
    int warmup_divergences = 0;
    double accept_sum = 0.0;
    double step_size = 0.0;
    Eigen::VectorXd inverse_mass;
    int max_leapfrog = 0;
};

// Nesterov dual averaging of log step size.
class DualAveraging {
public:
    void restart(double step_size) {
        mu_ = std::log(10.0 * step_size);
        h_bar_ = 0.0;
        log_eps_bar_ = 0.0;
        counter_ = 0;
    }

    double update(double accept_prob, double target) {
        ++counter_;
        const double n = static_cast<double>(counter_);
        const double eta = 1.0 / (n + kT0);
        h_bar_ = (1.0 - eta) * h_bar_ + eta * (target - accept_prob);
        const double log_eps = mu_ - std::sqrt(n) / kGamma * h_bar_;
        const double weight = std::pow(n, -kKappa);
        log_eps_bar_ = weight * log_eps + (1.0 - weight) * log_eps_bar_;
        return std::exp(log_eps);
    }

    double final_step() const { return std::exp(log_eps_bar_); }

private:
    static constexpr double kGamma = 0.05;
    static constexpr double kT0 = 10.0;
    static constexpr double kKappa = 0.75;
    double mu_ = 0.0;
    double h_bar_ = 0.0;
    double log_eps_bar_ = 0.0;
    long counter_ = 0;
};

double clamp_step(double eps) { return std::clamp(eps, 1e-12, 1e6); }

int path_cap(double step_size, int max_leapfrog) {
    const double wanted = std::ceil(std::numbers::pi / step_size);
    if (!(wanted < static_cast<double>(max_leapfrog))) return max_leapfrog;
    return std::max(1, static_cast<int>(wanted));
}

Eigen::VectorXd draw_momentum(Rng& rng, const Eigen::VectorXd& inverse_mass) {
    Eigen::VectorXd p(inverse_mass.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.normal() / std::sqrt(inverse_mass(i));
    return p;
}

// Doubles or halves the step until a single leapfrog step's acceptance ratio
// crosses 0.8.
double heuristic_step(const Target& target, const Eigen::VectorXd& x, double log_density,
                      const Eigen::VectorXd& grad, const Eigen::VectorXd& inverse_mass,
                      double eps, Rng& rng) {
    Eigen::VectorXd p0 = draw_momentum(rng, inverse_mass);
    const double h0 = hamiltonian(log_density, p0, inverse_mass);
    int direction = 0;
    for (int iter = 0; iter < 60; ++iter) {
        Eigen::VectorXd q = x, p = p0, g = grad;
        const double lp = leapfrog(target, q, p, g, inverse_mass, eps, 1);
        const double h = hamiltonian(lp, p, inverse_mass);
        const double delta = std::isfinite(h) ? h0 - h : -std::numeric_limits<double>::infinity();
        const int want = delta > std::log(0.8) ? 1 : -1;
        if (direction == 0) direction = want;
        if (want != direction) break;
        const double next = direction > 0 ? eps * 2.0 : eps * 0.5;
        if (next > 1e6 || next < 1e-12) break;
        eps = next;
    }
    return clamp_step(eps);
}

struct Window {
    int begin;
    int end;  // exclusive
};

// Slow (mass-matrix) windows inside warmup: 15% initial fast buffer, 10%
// final fast buffer, doubling windows in between starting at 25 iterations.
std::vector<Window> slow_windows(int n_warmup) {
    std::vector<Window> windows;
    if (n_warmup < 20) return windows;
    const int init_buffer = static_cast<int>(0.15 * n_warmup);
    const int term_buffer = static_cast<int>(0.10 * n_warmup);
    const int slow_end = n_warmup - term_buffer;
    int size = std::min(25, slow_end - init_buffer);
    int begin = init_buffer;
    while (begin < slow_end) {
        int end = begin + size;
        const int next_end = end + 2 * size;
        if (next_end > slow_end || end > slow_end) end = slow_end;
        windows.push_back({begin, end});
        begin = end;
        size *= 2;
    }
    return windows;
}

std::string describe_bad_coordinates(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                                     double log_density) {
    std::ostringstream out;
    out << "non-finite target at initialization after 20 attempts (log density " << log_density << ")";
    std::vector<Eigen::Index> bad;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x(i)) || !std::isfinite(grad(i))) bad.push_back(i);
    }
    if (!bad.empty()) {
        out << "; offending coordinates:";
        for (std::size_t k = 0; k < bad.size() && k < 20; ++k) out << ' ' << bad[k];
        if (bad.size() > 20) out << " ...";
    }
    return out.str();
}

ChainResult run_chain(const Target& target, std::size_t dim, const HmcConfig& config,
                      const Initializer& init, int chain) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(chain)));
    const auto d = static_cast<Eigen::Index>(dim);

    Eigen::VectorXd x(d), grad(d);
    double lp = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt < 20; ++attempt) {
        if (init) {
            x = init(rng);
        } else {
            for (Eigen::Index i = 0; i < d; ++i) x(i) = 4.0 * rng.uniform() - 2.0;
        }
        if (x.size() != d) throw InitializationError("initializer returned the wrong dimension");
        grad.setZero();
        lp = target({x.data(), dim}, {grad.data(), dim});
        if (std::isfinite(lp) && grad.allFinite()) break;
        if (attempt == 19) throw InitializationError(describe_bad_coordinates(x, grad, lp));
    }

    Eigen::VectorXd inverse_mass = Eigen::VectorXd::Ones(d);
    if (config.initial_inverse_mass.size() == d && (config.initial_inverse_mass.array() > 0.0).all()) {
        inverse_mass = config.initial_inverse_mass;
    }
    double eps = config.step_size > 0.0
                     ? config.step_size
                     : heuristic_step(target, x, lp, grad, inverse_mass, 1.0, rng);

    DualAveraging averaging;
    averaging.restart(eps);
    const std::vector<Window> windows = config.adapt ? slow_windows(config.n_warmup) : std::vector<Window>{};
    std::size_t window_index = 0;
    Eigen::VectorXd welford_mean = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd welford_m2 = Eigen::VectorXd::Zero(d);
    long welford_n = 0;

    ChainResult result;
    result.draws.resize(config.n_keep, d);

    const int total = config.n_warmup + config.n_keep;
    const int fixed_cap = config.fixed_max_leapfrog > 0 ? config.fixed_max_leapfrog : config.max_leapfrog;
    for (int iter = 0; iter < total; ++iter) {
        const bool warmup = iter < config.n_warmup;
        const int cap = config.adapt ? path_cap(eps, config.max_leapfrog) : fixed_cap;
        const int steps = static_cast<int>(rng.uniform_int(1, static_cast<std::uint64_t>(cap)));

        Eigen::VectorXd p = draw_momentum(rng, inverse_mass);
        const double h0 = hamiltonian(lp, p, inverse_mass);
        Eigen::VectorXd q = x, g = grad;
        const double lp_new = leapfrog(target, q, p, g, inverse_mass, eps, steps);
        const double h1 = hamiltonian(lp_new, p, inverse_mass);

        double accept_prob = 0.0;
        const bool divergent = !std::isfinite(h1) || !g.allFinite() || (h1 - h0) > kDivergenceThreshold;
        if (divergent) {
            if (warmup) ++result.warmup_divergences;
            else ++result.divergences;
        } else {
            accept_prob = std::min(1.0, std::exp(h0 - h1));
            if (rng.uniform() < accept_prob) {
                x = std::move(q);
                grad = std::move(g);
                lp = lp_new;
            }
        }

        if (warmup && config.adapt) {
            eps = clamp_step(averaging.update(accept_prob, config.target_accept));

            if (window_index < windows.size() && iter >= windows[window_index].begin &&
                iter < windows[window_index].end) {
                ++welford_n;
                const Eigen::VectorXd delta = x - welford_mean;
                welford_mean += delta / static_cast<double>(welford_n);
                welford_m2 += delta.cwiseProduct(x - welford_mean);
                if (iter + 1 == windows[window_index].end) {
                    const double n = static_cast<double>(welford_n);
                    if (welford_n > 1) {
                        const Eigen::VectorXd var = welford_m2 / (n - 1.0);
                        inverse_mass = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
                    }
                    welford_mean.setZero();
                    welford_m2.setZero();
                    welford_n = 0;
                    ++window_index;
                    eps = heuristic_step(target, x, lp, grad, inverse_mass, eps, rng);
                    averaging.restart(eps);
                }
            }
            if (iter + 1 == config.n_warmup) eps = clamp_step(averaging.final_step());
        }

        if (!warmup) {
            result.draws.row(iter - config.n_warmup) = x.transpose();
            result.accept_sum += accept_prob;
        }
    }
    result.step_size = eps;
    result.inverse_mass = inverse_mass;
    result.max_leapfrog = config.adapt ? path_cap(eps, config.max_leapfrog) : fixed_cap;
    return result;
}

std::vector<Eigen::MatrixXd> split_halves(const std::vector<Eigen::MatrixXd>& chains) {
    std::vector<Eigen::MatrixXd> halves;
    for (const auto& c : chains) {
        const Eigen::Index half = c.rows() / 2;
        halves.push_back(c.topRows(half));
        halves.push_back(c.bottomRows(half));
    }
    return halves;
}

void check_chain_shapes(const std::vector<Eigen::MatrixXd>& chains) {
    if (chains.empty()) throw DomainError("diagnostics need at least one chain");
    for (const auto& c : chains) {
        if (c.rows() < 4) throw DomainError("diagnostics need at least four draws per chain");
        if (c.rows() != chains.front().rows() || c.cols() != chains.front().cols()) {
            throw DomainError("chains must have equal shapes");
        }
    }
}

// Stan's ESS estimator for one dimension given per-chain samples.
double ess_of(const std::vector<Eigen::VectorXd>& chains) {
    const std::size_t m = chains.size();
    const Eigen::Index n = chains.front().size();
    std::vector<Eigen::VectorXd> acov(m);
    Eigen::VectorXd chain_mean(static_cast<Eigen::Index>(m));
    Eigen::VectorXd chain_var(static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < m; ++c) {
        const Eigen::VectorXd& x = chains[c];
        const double mean = x.mean();
        const Eigen::VectorXd centered = x.array() - mean;
        acov[c].resize(n);
        for (Eigen::Index lag = 0; lag < n; ++lag) {
            acov[c](lag) = centered.head(n - lag).dot(centered.tail(n - lag)) / static_cast<double>(n);
        }
        chain_mean(static_cast<Eigen::Index>(c)) = mean;
        chain_var(static_cast<Eigen::Index>(c)) = acov[c](0) * static_cast<double>(n) / static_cast<double>(n - 1);
    }
    const double mean_var = chain_var.mean();
    double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n);
    if (m > 1) {
        const double grand = chain_mean.mean();
        var_plus += (chain_mean.array() - grand).square().sum() / static_cast<double>(m - 1);
    }
    if (!(var_plus > 0.0)) return 0.0;

    auto mean_acov = [&](Eigen::Index lag) {
        double s = 0.0;
        for (const auto& a : acov) s += a(lag);
        return s / static_cast<double>(m);
    };

    // Geyer initial monotone sequence, indexed as in the posterior package:
    // pairs (t, t+1) for even t, truncated at the first negative pair sum.
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
    rho(0) = 1.0;
    double rho_even = 1.0;
    double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho(1) = rho_odd;
    Eigen::Index t = 0;
    while (t < n - 5 && (rho_even + rho_odd) > 0.0) {
        t += 2;
        rho_even = 1.0 - (mean_var - mean_acov(t)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
        if (rho_even + rho_odd >= 0.0) {
            rho(t) = rho_even;
            rho(t + 1) = rho_odd;
        }
    }
    const Eigen::Index max_t = t;
    if (rho_even > 0.0) rho(max_t) = rho_even;
    for (Eigen::Index s = 2; s <= max_t - 2; s += 2) {
        if (rho(s) + rho(s + 1) > rho(s - 2) + rho(s - 1)) {
            rho(s) = 0.5 * (rho(s - 2) + rho(s - 1));
            rho(s + 1) = rho(s);
        }
    }
    const double total = static_cast<double>(m) * static_cast<double>(n);
    const double tau = -1.0 + 2.0 * rho.head(max_t).sum() + rho(max_t);
    return std::min(total / tau, total * std::log10(total));
}

}  // namespace

std::vector<double> split_rhat(const std::vector<Eigen::MatrixXd>& chains) {
    check_chain_shapes(chains);
    const auto halves = split_halves(chains);
    const double m = static_cast<double>(halves.size());
    const double n = static_cast<double>(halves.front().rows());
    const Eigen::Index d = halves.front().cols();
    std::vector<double> out(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::VectorXd means(static_cast<Eigen::Index>(halves.size()));
        double within = 0.0;
        for (std::size_t c = 0; c < halves.size(); ++c) {
            const Eigen::VectorXd col = halves[c].col(j);
            const double mean = col.mean();
            means(static_cast<Eigen::Index>(c)) = mean;
            within += (col.array() - mean).square().sum() / (n - 1.0);
        }
        within /= m;
        const double grand = means.mean();
        const double between = n * (means.array() - grand).square().sum() / (m - 1.0);
        if (!(within > 0.0)) {
            out[static_cast<std::size_t>(j)] = std::numeric_limits<double>::infinity();
            continue;
        }
        const double var_plus = (n - 1.0) / n * within + between / n;
        out[static_cast<std::size_t>(j)] = std::sqrt(var_plus / within);
    }
    return out;
}

std::vector<double> bulk_ess(const std::vector<Eigen::MatrixXd>& chains) {
    check_chain_shapes(chains);
    const Eigen::Index n = chains.front().rows();
    const Eigen::Index d = chains.front().cols();
    const std::size_t m = chains.size();
    const std::size_t total = m * static_cast<std::size_t>(n);
    const boost::math::normal_distribution<double> standard;

    std::vector<double> out(static_cast<std::size_t>(d));
    std::vector<double> pooled(total);
    std::vector<std::size_t> order(total);
    std::vector<double> z(total);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (std::size_t c = 0; c < m; ++c) {
            for (Eigen::Index i = 0; i < n; ++i) pooled[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = chains[c](i, j);
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
        // Average ranks over ties, then Blom-type normal scores.
        std::size_t k = 0;
        while (k < total) {
            std::size_t end = k + 1;
            while (end < total && pooled[order[end]] == pooled[order[k]]) ++end;
            const double rank = 0.5 * static_cast<double>(k + 1 + end);
            const double u = (rank - 0.375) / (static_cast<double>(total) + 0.25);
            const double score = boost::math::quantile(standard, u);
            for (std::size_t i = k; i < end; ++i) z[order[i]] = score;
            k = end;
        }
        if (order.empty() || pooled[order.front()] == pooled[order.back()]) {
            out[static_cast<std::size_t>(j)] = 0.0;
            continue;
        }
        std::vector<Eigen::VectorXd> split;
        const Eigen::Index half = n / 2;
        for (std::size_t c = 0; c < m; ++c) {
            Eigen::Map<const Eigen::VectorXd> col(z.data() + c * static_cast<std::size_t>(n), n);
            split.emplace_back(col.head(half));
            split.emplace_back(col.tail(half));
        }
        out[static_cast<std::size_t>(j)] = ess_of(split);
    }
    return out;
}

PosteriorDraws run(const Target& target, std::size_t dimension, const HmcConfig& config,
                   const Initializer& init) {
    config.validate();
    if (dimension == 0) throw DomainError("HMC needs a positive dimension");
    const auto n_chains = static_cast<std::size_t>(config.n_chains);

    std::vector<ChainResult> results(n_chains);
    std::vector<std::exception_ptr> errors(n_chains);
    auto work = [&](std::size_t c) {
        try {
            results[c] = run_chain(target, dimension, config, init, static_cast<int>(c));
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    if (config.parallel_chains && n_chains > 1) {
        std::vector<std::thread> threads;
        for (std::size_t c = 0; c < n_chains; ++c) threads.emplace_back(work, c);
        for (auto& t : threads) t.join();
    } else {
        for (std::size_t c = 0; c < n_chains; ++c) work(c);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    PosteriorDraws out;
    const Eigen::Index keep = config.n_keep;
    out.draws.resize(static_cast<Eigen::Index>(n_chains) * keep, static_cast<Eigen::Index>(dimension));
    std::vector<Eigen::MatrixXd> chains;
    double accept = 0.0;
    for (std::size_t c = 0; c < n_chains; ++c) {
        out.draws.middleRows(static_cast<Eigen::Index>(c) * keep, keep) = results[c].draws;
        for (Eigen::Index i = 0; i < keep; ++i) out.chain_id.push_back(static_cast<int>(c));
        chains.push_back(results[c].draws);
        out.diagnostics.divergences += results[c].divergences;
        out.diagnostics.warmup_divergences += results[c].warmup_divergences;
        out.diagnostics.step_size.push_back(results[c].step_size);
        out.diagnostics.inverse_mass.push_back(results[c].inverse_mass);
        out.diagnostics.max_leapfrog.push_back(results[c].max_leapfrog);
        accept += results[c].accept_sum;
    }
    out.diagnostics.mean_accept = accept / static_cast<double>(out.draws.rows());
    if (keep >= 4) {
        out.diagnostics.split_rhat = split_rhat(chains);
        out.diagnostics.bulk_ess = bulk_ess(chains);
    }
    return out;
}

}  // namespace bdarma::hmc
