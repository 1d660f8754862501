#include "bdarma/baselines.hpp"

#include "bdarma/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace bdarma::baselines {

namespace {

int regressor_row_size(const ModelData& data, bool seasonal) {
    return seasonal ? data.spec().row_size() : 1;
}

std::string regressor_name(int column, int n, int order) {
    std::ostringstream out;
    if (column < n * order) {
        out << "e[t-" << (column / n + 1) << "][" << (column % n) << "]";
    } else {
        out << "f[" << (column - n * order) << "]";
    }
    return out.str();
}

}  // namespace

nlohmann::json VarFit::to_json() const {
    auto matrix = [](const Eigen::MatrixXd& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(row);
        }
        return rows;
    };
    nlohmann::json lags = nlohmann::json::array();
    for (const auto& f : lag_coefficients) lags.push_back(matrix(f));
    return {{"order", order},
            {"seasonal", seasonal},
            {"lag_coefficients", lags},
            {"delta", matrix(delta)},
            {"sigma", matrix(sigma)},
            {"regressors_per_equation", regressors_per_equation},
            {"n_residuals", residuals.rows()}};
}

Eigen::MatrixXd var_regressors(const ModelData& data, int order, bool seasonal) {
    const int n = data.n_coords();
    const int q = regressor_row_size(data, seasonal);
    const auto t_len = static_cast<Eigen::Index>(data.size());
    const Eigen::Index rows = std::max<Eigen::Index>(0, t_len - order);
    Eigen::MatrixXd x(rows, n * order + q);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index t = r + order;
        for (int l = 1; l <= order; ++l) x.block(r, (l - 1) * n, 1, n) = data.alr().row(t - l);
        x.block(r, n * order, 1, q) = data.design().row(t).head(q);
    }
    return x;
}

VarFit fit_var(const ModelData& data, int order, bool seasonal) {
    if (order < 1) throw DomainError("VAR order must be at least one");
    const int n = data.n_coords();
    const int q = regressor_row_size(data, seasonal);
    const int p = n * order + q;
    const auto t_len = static_cast<int>(data.size());
    if (t_len - order <= p) {
        throw InsufficientData("VAR(" + std::to_string(order) + ") with " + std::to_string(p) +
                               " regressors per equation needs more than " +
                               std::to_string(p + order) + " observations, got " +
                               std::to_string(t_len));
    }
    const Eigen::MatrixXd x = var_regressors(data, order, seasonal);
    const Eigen::MatrixXd y = data.alr().bottomRows(t_len - order);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) {
        std::ostringstream msg;
        msg << "regressor matrix has rank " << qr.rank() << " < " << p << "; collinear columns:";
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p; ++k) msg << ' ' << regressor_name(perm(k), n, order);
        throw SingularDesign(msg.str());
    }
    const Eigen::MatrixXd coef = qr.solve(y);  // p x n

    VarFit fit;
    fit.order = order;
    fit.seasonal = seasonal;
    for (int l = 0; l < order; ++l) fit.lag_coefficients.push_back(coef.block(l * n, 0, n, n).transpose());
    fit.delta = coef.bottomRows(q).transpose();
    fit.residuals = y - x * coef;
    fit.sigma = fit.residuals.transpose() * fit.residuals / static_cast<double>(t_len - order - p);
    fit.sigma = 0.5 * (fit.sigma + fit.sigma.transpose());
    fit.regressors_per_equation = p;
    fit.first_fitted_row = order;
    return fit;
}

TvarFit fit_tvar2(const ModelData& data) { return fit_var(data, 2, true); }

GaussianForecast var_forecast_moments(const VarFit& fit, const ModelData& data, int horizon) {
    if (horizon < 1) throw DomainError("forecast horizon must be at least one");
    const int n = data.n_coords();
    const int order = fit.order;
    const auto q = fit.delta.cols();
    if (static_cast<int>(data.size()) < order) throw InsufficientData("not enough history to forecast");

    std::vector<Eigen::VectorXd> history;
    for (int l = order; l >= 1; --l) {
        history.push_back(data.alr().row(static_cast<Eigen::Index>(data.size()) - l).transpose());
    }
    const std::size_t last = data.size() - 1;

    GaussianForecast out;
    std::vector<Eigen::MatrixXd> psi{Eigen::MatrixXd::Identity(n, n)};
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (int h = 1; h <= horizon; ++h) {
        const Eigen::VectorXd f = fourier_row(data.series().global_index(last) + h, data.spec()).f.head(q);
        Eigen::VectorXd mean = fit.delta * f;
        for (int l = 1; l <= order; ++l) {
            mean += fit.lag_coefficients[static_cast<std::size_t>(l - 1)] * history[history.size() - static_cast<std::size_t>(l)];
        }
        history.push_back(mean);
        out.mean.push_back(mean);

        const Eigen::MatrixXd& latest = psi.back();
        cov += latest * fit.sigma * latest.transpose();
        out.covariance.push_back(0.5 * (cov + cov.transpose()));

        const int i = static_cast<int>(psi.size());
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
        for (int l = 1; l <= std::min(i, order); ++l) {
            next += fit.lag_coefficients[static_cast<std::size_t>(l - 1)] * psi[static_cast<std::size_t>(i - l)];
        }
        psi.push_back(std::move(next));
    }
    return out;
}

namespace {

// Square-root factor S with S S' = V from a pivoted LDLT. Pivots within
// rounding of zero are clamped; a materially negative pivot triggers one
// retry with 1e-10 I added.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& v) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        Eigen::MatrixXd target = v;
        if (attempt == 1) target += 1e-10 * Eigen::MatrixXd::Identity(v.rows(), v.cols());
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(target);
        const Eigen::VectorXd d = ldlt.vectorD();
        const double scale = std::max(d.cwiseAbs().maxCoeff(), 1e-300);
        if (ldlt.info() != Eigen::Success || (d.array() < -1e-12 * scale).any()) continue;
        const Eigen::VectorXd root = d.cwiseMax(0.0).cwiseSqrt();
        Eigen::MatrixXd lower = ldlt.matrixL();
        Eigen::MatrixXd factor = lower * root.asDiagonal();
        return ldlt.transpositionsP().transpose() * factor;
    }
    throw NumericalError("forecast covariance is not positive semidefinite");
}

}  // namespace

ForecastFan tvar2_fan(const TvarFit& fit, const ModelData& data, int horizon, std::size_t fan_size,
                      Rng& rng) {
    const GaussianForecast moments = var_forecast_moments(fit, data, horizon);
    const PartSetPtr& parts = data.series().parts();
    const std::size_t ref = parts->reference_index();
    const int n = data.n_coords();
    ForecastFan fan;
    std::vector<double> shares(parts->size());
    Eigen::VectorXd z(n);
    for (int h = 0; h < horizon; ++h) {
        const Eigen::MatrixXd factor = covariance_factor(moments.covariance[static_cast<std::size_t>(h)]);
        Fan f{parts, Eigen::MatrixXd(static_cast<Eigen::Index>(fan_size), static_cast<Eigen::Index>(parts->size()))};
        for (std::size_t m = 0; m < fan_size; ++m) {
            for (int i = 0; i < n; ++i) z(i) = rng.normal();
            const Eigen::VectorXd eta = moments.mean[static_cast<std::size_t>(h)] + factor * z;
            ::bdarma::detail::alr_inv_into({eta.data(), static_cast<std::size_t>(n)}, ref, shares);
            for (std::size_t j = 0; j < shares.size(); ++j) {
                f.draws(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) =
                    std::max(shares[j], std::numeric_limits<double>::min());
            }
        }
        fan.push_back(std::move(f));
    }
    return fan;
}

ForecastFan alr_rw_fan(const ModelData& data, int horizon, std::size_t fan_size) {
    if (data.size() < 1) throw InsufficientData("random walk needs one observation");
    const PartSetPtr& parts = data.series().parts();
    const Eigen::VectorXd last = data.alr().row(static_cast<Eigen::Index>(data.size()) - 1).transpose();
    const Composition point = alr_inv(AlrVector(parts, last));
    return ForecastFan(static_cast<std::size_t>(horizon), Fan::degenerate(point, fan_size));
}

ForecastFan snaive_fan(const CompositionalSeries& series, std::size_t origin_row, int horizon,
                       std::size_t fan_size, int period) {
    if (origin_row + 1 < static_cast<std::size_t>(period) || origin_row >= series.size()) {
        throw InsufficientHistory("seasonal naive needs " + std::to_string(period) +
                                  " months of history at the origin");
    }
    ForecastFan fan;
    for (int h = 1; h <= horizon; ++h) {
        // Months beyond one period reuse the same calendar month of the last
        // observed year.
        const int back = period * ((h - 1) / period + 1);
        const auto row = static_cast<std::size_t>(static_cast<long>(origin_row) + h - back);
        fan.push_back(Fan::degenerate(series.at(row), fan_size));
    }
    return fan;
}

double chi_square_upper_tail(double statistic, double dof) {
    if (!(dof > 0.0)) throw DomainError("chi-square degrees of freedom must be positive");
    if (!(statistic > 0.0)) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

TestResult ljung_box(const Eigen::VectorXd& residuals, int lags) {
    const Eigen::Index n = residuals.size();
    if (lags < 1) throw DomainError("Ljung-Box needs at least one lag");
    if (n < lags + 2) throw InsufficientData("Ljung-Box needs at least lags + 2 residuals");
    const Eigen::VectorXd c = residuals.array() - residuals.mean();
    const double denom = c.squaredNorm();
    if (!(denom > 0.0)) throw DegenerateSeries("Ljung-Box on a constant series");
    double q = 0.0;
    for (int k = 1; k <= lags; ++k) {
        const double rho = c.head(n - k).dot(c.tail(n - k)) / denom;
        q += rho * rho / static_cast<double>(n - k);
    }
    const double nd = static_cast<double>(n);
    q *= nd * (nd + 2.0);
    return {q, chi_square_upper_tail(q, lags), static_cast<double>(lags)};
}

TestResult hosking_portmanteau(const Eigen::MatrixXd& residuals, int max_lag, int fitted_params) {
    const Eigen::Index n = residuals.rows();
    const Eigen::Index d = residuals.cols();
    if (max_lag < 1) throw DomainError("portmanteau needs at least one lag");
    if (n <= max_lag + d) throw InsufficientData("portmanteau needs n > max_lag + d");
    const double dof = static_cast<double>(d * d * max_lag - fitted_params);
    if (!(dof > 0.0)) throw DomainError("portmanteau degrees of freedom must be positive");

    const Eigen::RowVectorXd mean = residuals.colwise().mean();
    const Eigen::MatrixXd c = residuals.rowwise() - mean;
    const double nd = static_cast<double>(n);
    const Eigen::MatrixXd c0 = c.transpose() * c / nd;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c0);
    const double largest = eig.eigenvalues().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(largest, 1e-300))) {
        throw SingularCovariance("residual covariance is singular");
    }
    const Eigen::MatrixXd c0_inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                                   eig.eigenvectors().transpose();
    double q = 0.0;
    for (int k = 1; k <= max_lag; ++k) {
        const Eigen::MatrixXd ck = c.bottomRows(n - k).transpose() * c.topRows(n - k) / nd;
        q += (ck.transpose() * c0_inv * ck * c0_inv).trace() / static_cast<double>(n - k);
    }
    q *= nd * nd;
    return {q, chi_square_upper_tail(q, dof), dof};
}


DiagnosticReport diagnose(const ModelData& data, int ljung_box_lags, int hosking_lag) {
    DiagnosticReport report;
    report.ljung_box_lags = ljung_box_lags;
    report.hosking_lag = hosking_lag;
    const int n = data.n_coords();
    for (int order : {1, 2}) {
        for (bool seasonal : {false, true}) {
            const VarFit fit = fit_var(data, order, seasonal);
            DiagnosticRow row;
            row.order = order;
            row.seasonal = seasonal;
            for (int j = 0; j < n; ++j) {
                row.ljung_box.push_back(ljung_box(fit.residuals.col(j), ljung_box_lags));
            }
            row.hosking = hosking_portmanteau(fit.residuals, hosking_lag, 0);
            row.hosking_adjusted = hosking_portmanteau(fit.residuals, hosking_lag, n * n * order);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

namespace {

nlohmann::json test_json(const TestResult& r) {
    return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"dof", r.dof}};
}

}  // namespace

nlohmann::json DiagnosticReport::to_json() const {
    nlohmann::json out = {{"ljung_box_lags", ljung_box_lags}, {"hosking_lag", hosking_lag}};
    nlohmann::json list = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json lb = nlohmann::json::array();
        for (const auto& t : row.ljung_box) lb.push_back(test_json(t));
        list.push_back({{"order", row.order},
                        {"seasonal", row.seasonal},
                        {"ljung_box", lb},
                        {"hosking", test_json(row.hosking)},
                        {"hosking_adjusted", test_json(row.hosking_adjusted)}});
    }
    out["rows"] = list;
    return out;
}

std::string DiagnosticReport::to_text(const std::vector<std::string>& coord_labels) const {
    std::ostringstream out;
    char buf[160];
    out << "Ljung-Box (lags 1-" << ljung_box_lags << "), p-values per ALR coordinate\n";
    std::snprintf(buf, sizeof buf, "%-16s", "model");
    out << buf;
    for (const auto& label : coord_labels) {
        std::snprintf(buf, sizeof buf, " %10s", label.c_str());
        out << buf;
    }
    out << '\n';
    auto spec_name = [](const DiagnosticRow& row) {
        return "VAR(" + std::to_string(row.order) + ")" + (row.seasonal ? "+harm" : "");
    };
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%-16s", spec_name(row).c_str());
        out << buf;
        for (const auto& t : row.ljung_box) {
            std::snprintf(buf, sizeof buf, " %10.4f", t.p_value);
            out << buf;
        }
        out << '\n';
    }
    out << "\nHosking portmanteau (lag " << hosking_lag << ")\n";
    std::snprintf(buf, sizeof buf, "%-16s %12s %6s %10s %6s %10s\n", "model", "Q", "df", "p", "df_adj", "p_adj");
    out << buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%-16s %12.2f %6.0f %10.4g %6.0f %10.4g\n", spec_name(row).c_str(),
                      row.hosking.statistic, row.hosking.dof, row.hosking.p_value, row.hosking_adjusted.dof,
                      row.hosking_adjusted.p_value);
        out << buf;
    }
    return out.str();
}

}  // namespace bdarma::baselines
