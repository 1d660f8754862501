#include "bdarma/model.hpp"

#include "bdarma/dirichlet.hpp"
#include "bdarma/errors.hpp"
#include "bdarma/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bdarma {

std::size_t parameter_dimension(int n_coords, const FourierSpec& spec) {
    const auto n = static_cast<std::size_t>(n_coords);
    const auto p = static_cast<std::size_t>(spec.row_size());
    return 2 * n * n + n * p + p;
}

std::vector<std::string> parameter_names(int n_coords, const FourierSpec& spec) {
    std::vector<std::string> names;
    for (const char* m : {"A1", "A2"}) {
        for (int i = 0; i < n_coords; ++i) {
            for (int j = 0; j < n_coords; ++j) {
                names.push_back(std::string(m) + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]");
            }
        }
    }
    for (int j = 0; j < n_coords; ++j) {
        for (int k = 0; k < spec.row_size(); ++k) {
            names.push_back("beta[" + std::to_string(j + 1) + "," + std::to_string(k + 1) + "]");
        }
    }
    for (int k = 0; k < spec.row_size(); ++k) names.push_back("gamma[" + std::to_string(k + 1) + "]");
    return names;
}

BdarmaParams BdarmaParams::zeros(int n_coords, const FourierSpec& spec) {
    const int p = spec.row_size();
    return {Eigen::MatrixXd::Zero(n_coords, n_coords), Eigen::MatrixXd::Zero(n_coords, n_coords),
            Eigen::VectorXd::Zero(n_coords * p), Eigen::VectorXd::Zero(p)};
}

BdarmaParams BdarmaParams::unpack(std::span<const double> theta, int n_coords, const FourierSpec& spec) {
    if (theta.size() != parameter_dimension(n_coords, spec)) {
        throw DomainError("parameter vector has length " + std::to_string(theta.size()) +
                          ", expected " + std::to_string(parameter_dimension(n_coords, spec)));
    }
    BdarmaParams out = zeros(n_coords, spec);
    std::size_t k = 0;
    for (auto* m : {&out.a1, &out.a2}) {
        for (int i = 0; i < n_coords; ++i) {
            for (int j = 0; j < n_coords; ++j) (*m)(i, j) = theta[k++];
        }
    }
    for (Eigen::Index i = 0; i < out.beta.size(); ++i) out.beta(i) = theta[k++];
    for (Eigen::Index i = 0; i < out.gamma.size(); ++i) out.gamma(i) = theta[k++];
    return out;
}

Eigen::VectorXd BdarmaParams::pack() const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(dimension()));
    Eigen::Index k = 0;
    for (const auto* m : {&a1, &a2}) {
        for (Eigen::Index i = 0; i < m->rows(); ++i) {
            for (Eigen::Index j = 0; j < m->cols(); ++j) theta(k++) = (*m)(i, j);
        }
    }
    theta.segment(k, beta.size()) = beta;
    k += beta.size();
    theta.segment(k, gamma.size()) = gamma;
    return theta;
}

std::size_t BdarmaParams::dimension() const {
    return static_cast<std::size_t>(a1.size() + a2.size() + beta.size() + gamma.size());
}

ModelData::ModelData(CompositionalSeries series, FourierSpec spec)
    : series_(std::move(series)), spec_(spec) {
    const auto t_len = static_cast<Eigen::Index>(series_.size());
    const auto j_len = static_cast<Eigen::Index>(series_.n_parts());
    const std::size_t ref = series_.parts()->reference_index();
    alr_.resize(t_len, j_len - 1);
    log_shares_ = series_.shares().array().log();
    design_.resize(t_len, spec_.row_size());
    for (Eigen::Index t = 0; t < t_len; ++t) {
        Eigen::Index k = 0;
        for (Eigen::Index j = 0; j < j_len; ++j) {
            if (static_cast<std::size_t>(j) == ref) continue;
            alr_(t, k++) = log_shares_(t, j) - log_shares_(t, static_cast<Eigen::Index>(ref));
        }
        design_.row(t) = fourier_row(series_.global_index(static_cast<std::size_t>(t)), spec_).f.transpose();
    }
}

DesignRow ModelData::design_row(std::size_t row) const {
    return {design_.row(static_cast<Eigen::Index>(row)).transpose(),
            series_.global_index(row)};
}

double precision_at(const Eigen::VectorXd& gamma, const DesignRow& row, bool* clamped) {
    if (gamma.size() != row.f.size()) throw DomainError("gamma and design row lengths differ");
    const double lin = gamma.dot(row.f);
    const double bounded = std::clamp(lin, -kLogPrecisionClamp, kLogPrecisionClamp);
    if (clamped) *clamped = bounded != lin;
    return std::exp(bounded);
}

namespace {

void check_params(const BdarmaParams& params, const ModelData& data) {
    const int n = data.n_coords();
    const int p = data.spec().row_size();
    if (params.a1.rows() != n || params.a1.cols() != n || params.a2.rows() != n ||
        params.a2.cols() != n || params.beta.size() != n * p || params.gamma.size() != p) {
        throw DomainError("parameter shapes do not match the data");
    }
}

}  // namespace

AlrVector mean_recursion(const BdarmaParams& params, const ModelData& data, int t) {
    check_params(params, data);
    if (t < 3 || t > static_cast<int>(data.size())) {
        throw OutOfRange("mean_recursion needs 3 <= t <= T, got t=" + std::to_string(t));
    }
    const auto row = static_cast<std::size_t>(t - 1);
    auto residual = [&](std::size_t r) -> Eigen::VectorXd {
        return data.alr().row(static_cast<Eigen::Index>(r)).transpose() - apply_design(data.design_row(r), params.beta);
    };
    Eigen::VectorXd eta = apply_design(data.design_row(row), params.beta) +
                          params.a1 * residual(row - 1) + params.a2 * residual(row - 2);
    return AlrVector(data.series().parts(), std::move(eta));
}

BdarmaPosterior::BdarmaPosterior(std::shared_ptr<const ModelData> data)
    : data_(std::move(data)), dimension_(parameter_dimension(data_->n_coords(), data_->spec())) {}

double BdarmaPosterior::log_posterior(std::span<const double> theta) const {
    return evaluate(theta, nullptr);
}

double BdarmaPosterior::log_posterior_and_gradient(std::span<const double> theta,
                                                   std::span<double> grad) const {
    if (grad.size() != dimension_) throw DomainError("gradient buffer has the wrong length");
    return evaluate(theta, grad.data());
}

hmc::Target BdarmaPosterior::target() const {
    return [this](std::span<const double> x, std::span<double> g) {
        return log_posterior_and_gradient(x, g);
    };
}

double BdarmaPosterior::evaluate(std::span<const double> theta, double* grad) const {
    if (theta.size() != dimension_) {
        throw DomainError("parameter vector has length " + std::to_string(theta.size()) +
                          ", expected " + std::to_string(dimension_));
    }
    const ModelData& data = *data_;
    const std::size_t n = static_cast<std::size_t>(data.n_coords());
    const std::size_t n_parts = n + 1;
    const std::size_t p = static_cast<std::size_t>(data.spec().row_size());
    const std::size_t t_len = data.size();
    const std::size_t ref = data.series().parts()->reference_index();

    const double* a1 = theta.data();
    const double* a2 = a1 + n * n;
    const double* beta = a2 + n * n;
    const double* gamma = beta + n * p;

    // Prior: independent N(0, 1) with normalizing constant.
    double value = 0.0;
    for (std::size_t d = 0; d < dimension_; ++d) {
        value -= 0.5 * theta[d] * theta[d];
        if (grad) grad[d] = -theta[d];
    }
    value -= 0.5 * static_cast<double>(dimension_) * std::log(2.0 * std::numbers::pi);
    if (t_len < 3) return value;

    const Eigen::MatrixXd& design = data.design();
    const Eigen::MatrixXd& e = data.alr();
    const Eigen::MatrixXd& log_y = data.log_shares();

    // Seasonal means m_t = X_t beta and residuals r_t = e_t - m_t.
    std::vector<double> resid(t_len * n);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            double m = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
                m += design(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) * beta[j * p + i];
            }
            resid[t * n + j] = e(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) - m;
        }
    }

    std::vector<double> dmean;  // d value / d m_t, T x n
    if (grad) dmean.assign(t_len * n, 0.0);
    std::vector<double> eta(n), mu(n_parts), alpha(n_parts), g(n_parts), u(n);
    double* g_a1 = grad;
    double* g_a2 = grad ? grad + n * n : nullptr;
    double* g_gamma = grad ? grad + 2 * n * n + n * p : nullptr;
    long clamped_here = 0;

    for (std::size_t t = 2; t < t_len; ++t) {
        const double* r1 = &resid[(t - 1) * n];
        const double* r2 = &resid[(t - 2) * n];
        const double* rt = &resid[t * n];
        for (std::size_t i = 0; i < n; ++i) {
            // m_t = e_t - r_t
            double v = e(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) - rt[i];
            for (std::size_t k = 0; k < n; ++k) v += a1[i * n + k] * r1[k] + a2[i * n + k] * r2[k];
            eta[i] = v;
        }

        double lin = 0.0;
        for (std::size_t i = 0; i < p; ++i) lin += design(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) * gamma[i];
        const bool clamped = lin > kLogPrecisionClamp || lin < -kLogPrecisionClamp;
        if (clamped) ++clamped_here;
        const double phi = std::exp(std::clamp(lin, -kLogPrecisionClamp, kLogPrecisionClamp));

        detail::alr_inv_into(eta, ref, mu);
        double total = 0.0;
        for (std::size_t j = 0; j < n_parts; ++j) {
            alpha[j] = std::max(phi * mu[j], std::numeric_limits<double>::min());
            total += alpha[j];
        }
        double ll = special::log_gamma(total);
        for (std::size_t j = 0; j < n_parts; ++j) {
            const double ly = log_y(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
            ll += (alpha[j] - 1.0) * ly - special::log_gamma(alpha[j]);
        }
        value += ll;

        if (!grad) continue;
        const double psi_total = special::digamma(total);
        double s = 0.0;
        for (std::size_t j = 0; j < n_parts; ++j) {
            g[j] = psi_total - special::digamma(alpha[j]) +
                   log_y(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
            s += g[j] * mu[j];
        }
        if (!clamped) {
            for (std::size_t i = 0; i < p; ++i) {
                g_gamma[i] += design(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) * phi * s;
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t part = k < ref ? k : k + 1;
            u[k] = phi * mu[part] * (g[part] - s);
        }
        double* dm_t = &dmean[t * n];
        double* dm_1 = &dmean[(t - 1) * n];
        double* dm_2 = &dmean[(t - 2) * n];
        for (std::size_t i = 0; i < n; ++i) {
            dm_t[i] += u[i];
            for (std::size_t k = 0; k < n; ++k) {
                g_a1[i * n + k] += u[i] * r1[k];
                g_a2[i * n + k] += u[i] * r2[k];
                // r = e - m, so d/dm_{t-p} picks up -A_p^T u
                dm_1[k] -= a1[i * n + k] * u[i];
                dm_2[k] -= a2[i * n + k] * u[i];
            }
        }
    }
    if (clamped_here) clamp_events_.fetch_add(clamped_here, std::memory_order_relaxed);

    if (grad) {
        double* g_beta = grad + 2 * n * n;
        for (std::size_t t = 0; t < t_len; ++t) {
            for (std::size_t j = 0; j < n; ++j) {
                const double dm = dmean[t * n + j];
                if (dm == 0.0) continue;
                for (std::size_t i = 0; i < p; ++i) {
                    g_beta[j * p + i] += dm * design(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
                }
            }
        }
    }
    return value;
}

double log_posterior(const BdarmaParams& params, const ModelData& data) {
    check_params(params, data);
    BdarmaPosterior posterior(std::make_shared<const ModelData>(data));
    const Eigen::VectorXd theta = params.pack();
    return posterior.log_posterior(theta);
}

Eigen::VectorXd grad_log_posterior(const BdarmaParams& params, const ModelData& data) {
    check_params(params, data);
    BdarmaPosterior posterior(std::make_shared<const ModelData>(data));
    const Eigen::VectorXd theta = params.pack();
    Eigen::VectorXd grad(theta.size());
    posterior.log_posterior_and_gradient({theta.data(), static_cast<std::size_t>(theta.size())},
                                         {grad.data(), static_cast<std::size_t>(grad.size())});
    return grad;
}

Eigen::VectorXd initial_point(const ModelData& data, Rng& rng) {
    const int n = data.n_coords();
    const FourierSpec& spec = data.spec();
    const int p = spec.row_size();
    BdarmaParams params = BdarmaParams::zeros(n, spec);
    for (Eigen::Index i = 0; i < params.a1.size(); ++i) params.a1.data()[i] = 0.1 * rng.normal();
    for (Eigen::Index i = 0; i < params.a2.size(); ++i) params.a2.data()[i] = 0.1 * rng.normal();
    for (Eigen::Index i = 1; i < params.gamma.size(); ++i) params.gamma(i) = 0.1 * rng.normal();

    // Per-coordinate seasonal regression of the ALR series.
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(data.design());
    for (int j = 0; j < n; ++j) {
        params.beta.segment(j * p, p) = cod.solve(data.alr().col(j));
    }

    // Moment-matched precision: Var(y_j) = mu_j (1 - mu_j) / (phi + 1).
    const Eigen::Index t_len = static_cast<Eigen::Index>(data.size());
    const std::size_t ref = data.series().parts()->reference_index();
    const Eigen::Index n_parts = n + 1;
    Eigen::VectorXd spread = Eigen::VectorXd::Zero(n_parts);
    Eigen::VectorXd sq_err = Eigen::VectorXd::Zero(n_parts);
    std::vector<double> mu(static_cast<std::size_t>(n_parts));
    for (Eigen::Index t = 0; t < t_len; ++t) {
        const Eigen::VectorXd eta = apply_design(data.design_row(static_cast<std::size_t>(t)), params.beta);
        detail::alr_inv_into({eta.data(), static_cast<std::size_t>(n)}, ref, mu);
        for (Eigen::Index j = 0; j < n_parts; ++j) {
            const double m = mu[static_cast<std::size_t>(j)];
            spread(j) += m * (1.0 - m);
            const double err = data.series().shares()(t, j) - m;
            sq_err(j) += err * err;
        }
    }
    std::vector<double> ratios;
    for (Eigen::Index j = 0; j < n_parts; ++j) {
        if (sq_err(j) > 0.0) ratios.push_back(spread(j) / sq_err(j) - 1.0);
    }
    double phi = 100.0;
    if (!ratios.empty()) {
        std::nth_element(ratios.begin(), ratios.begin() + static_cast<long>(ratios.size() / 2), ratios.end());
        phi = ratios[ratios.size() / 2];
    }
    params.gamma(0) = std::log(std::clamp(phi, 1.0, 1e6));
    return params.pack();
}

BdarmaFit fit_bdarma(const ModelData& data, const hmc::HmcConfig& config) {
    if (data.size() < 3) throw InsufficientData("BDARMA needs at least three observations");
    auto shared = std::make_shared<const ModelData>(data);
    BdarmaPosterior posterior(shared);
    auto init = [shared](Rng& rng) { return initial_point(*shared, rng); };
    BdarmaFit fit;
    fit.posterior = hmc::run(posterior.target(), posterior.dimension(), config, init);
    fit.clamp_events = posterior.clamp_events();
    return fit;
}

ForecastFan forecast_fan(const hmc::PosteriorDraws& draws, const ModelData& data, int horizon,
                         std::size_t fan_size, Rng& rng) {
    if (horizon < 1) throw DomainError("forecast horizon must be at least one");
    if (draws.size() == 0 || fan_size == 0) throw DomainError("forecast fan needs draws");
    if (data.size() < 2) throw InsufficientData("forecasting needs two observed months");
    const int n = data.n_coords();
    const FourierSpec& spec = data.spec();
    const PartSetPtr& parts = data.series().parts();
    const std::size_t ref = parts->reference_index();
    const std::size_t n_parts = parts->size();
    const std::size_t last = data.size() - 1;

    std::vector<Eigen::VectorXd> future_f;
    for (int h = 1; h <= horizon; ++h) {
        future_f.push_back(fourier_row(data.series().global_index(last) + h, spec).f);
    }

    ForecastFan fan(static_cast<std::size_t>(horizon));
    for (auto& f : fan) {
        f.parts = parts;
        f.draws.resize(static_cast<Eigen::Index>(fan_size), static_cast<Eigen::Index>(n_parts));
    }

    std::vector<double> mu(n_parts), alpha(n_parts), y(n_parts);
    for (std::size_t m = 0; m < fan_size; ++m) {
        const auto row = static_cast<Eigen::Index>(m % draws.size());
        const Eigen::VectorXd theta = draws.draws.row(row).transpose();
        const BdarmaParams params =
            BdarmaParams::unpack(theta, n, spec);
        auto observed_residual = [&](std::size_t r) -> Eigen::VectorXd {
            return data.alr().row(static_cast<Eigen::Index>(r)).transpose() -
                   apply_design(data.design_row(r), params.beta);
        };
        Eigen::VectorXd r1 = observed_residual(last);
        Eigen::VectorXd r2 = observed_residual(last - 1);
        for (int h = 0; h < horizon; ++h) {
            const DesignRow f{future_f[static_cast<std::size_t>(h)], 0};
            const Eigen::VectorXd mean = apply_design(f, params.beta);
            const Eigen::VectorXd eta = mean + params.a1 * r1 + params.a2 * r2;
            r2 = std::move(r1);
            r1 = eta - mean;
            const double phi = precision_at(params.gamma, f);
            detail::alr_inv_into({eta.data(), static_cast<std::size_t>(n)}, ref, mu);
            for (std::size_t j = 0; j < n_parts; ++j) alpha[j] = std::max(phi * mu[j], 1e-300);
            dirichlet::detail::sample_into(alpha, rng, y);
            for (std::size_t j = 0; j < n_parts; ++j) {
                fan[static_cast<std::size_t>(h)].draws(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = y[j];
            }
        }
    }
    return fan;
}

CompositionalSeries simulate_series(const BdarmaParams& params, int length, const PartSetPtr& parts,
                                    const FourierSpec& spec, YearMonth start, Rng& rng) {
    if (length < 3) throw DomainError("simulated series needs T >= 3");
    const int n = static_cast<int>(parts->size()) - 1;
    if (params.n_coords() != n || params.beta.size() != n * spec.row_size() ||
        params.gamma.size() != spec.row_size()) {
        throw DomainError("parameter shapes do not match the requested composition");
    }
    const std::size_t ref = parts->reference_index();
    const auto n_parts = static_cast<std::size_t>(n + 1);
    Eigen::MatrixXd shares(length, static_cast<Eigen::Index>(n_parts));
    std::vector<Eigen::VectorXd> resid;
    std::vector<double> mu(n_parts), alpha(n_parts), y(n_parts), e(static_cast<std::size_t>(n));

    for (int t = 0; t < length; ++t) {
        const DesignRow row = fourier_row(t + 1, spec);
        const Eigen::VectorXd mean = apply_design(row, params.beta);
        if (t < 2) {
            detail::alr_inv_into({mean.data(), static_cast<std::size_t>(n)}, ref, y);
            resid.push_back(Eigen::VectorXd::Zero(n));
        } else {
            const Eigen::VectorXd eta = mean + params.a1 * resid[static_cast<std::size_t>(t - 1)] +
                                        params.a2 * resid[static_cast<std::size_t>(t - 2)];
            const double phi = precision_at(params.gamma, row);
            detail::alr_inv_into({eta.data(), static_cast<std::size_t>(n)}, ref, mu);
            for (std::size_t j = 0; j < n_parts; ++j) alpha[j] = std::max(phi * mu[j], 1e-300);
            dirichlet::detail::sample_into(alpha, rng, y);
            detail::alr_into(y, ref, e);
            resid.push_back(Eigen::Map<const Eigen::VectorXd>(e.data(), n) - mean);
        }
        for (std::size_t j = 0; j < n_parts; ++j) shares(t, static_cast<Eigen::Index>(j)) = y[j];
    }
    // Renormalize rows so they pass the strict sum-to-one check after flooring.
    for (Eigen::Index t = 0; t < shares.rows(); ++t) shares.row(t) /= shares.row(t).sum();
    return CompositionalSeries(parts, start, std::move(shares));
}

}  // namespace bdarma
