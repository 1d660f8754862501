#include "bdarma/seasonal.hpp"

#include "bdarma/errors.hpp"

#include <cmath>
#include <numbers>

namespace bdarma {

FourierSpec::FourierSpec(int period_, int n_harmonics_) : period(period_), n_harmonics(n_harmonics_) {
    if (n_harmonics < 1) throw DomainError("need at least one harmonic");
    if (period < 1 || 2 * n_harmonics >= period) {
        throw DomainError("2 * n_harmonics must be below the period");
    }
}

DesignRow fourier_row(int t, const FourierSpec& spec) {
    DesignRow row;
    row.t_index = t;
    row.f.resize(spec.row_size());
    row.f(0) = 1.0;
    // Reduce t modulo the period first so rows repeat bit-for-bit.
    int phase = t % spec.period;
    if (phase < 0) phase += spec.period;
    for (int k = 1; k <= spec.n_harmonics; ++k) {
        const int step = (k * phase) % spec.period;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(step) /
                             static_cast<double>(spec.period);
        row.f(2 * k - 1) = std::sin(angle);
        row.f(2 * k) = std::cos(angle);
    }
    return row;
}

std::vector<DesignRow> fourier_rows(int first, std::size_t count, const FourierSpec& spec) {
    std::vector<DesignRow> rows;
    rows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) rows.push_back(fourier_row(first + static_cast<int>(i), spec));
    return rows;
}

Eigen::MatrixXd block_design(const DesignRow& row, int n_coords) {
    if (n_coords < 1) throw DomainError("block_design needs at least one coordinate");
    const Eigen::Index p = row.f.size();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_coords, n_coords * p);
    for (int j = 0; j < n_coords; ++j) x.block(j, j * p, 1, p) = row.f.transpose();
    return x;
}

void apply_design(const Eigen::VectorXd& f, std::span<const double> beta, std::span<double> out) {
    const std::size_t p = static_cast<std::size_t>(f.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p; ++i) acc += f(static_cast<Eigen::Index>(i)) * beta[j * p + i];
        out[j] = acc;
    }
}

Eigen::VectorXd apply_design(const DesignRow& row, const Eigen::VectorXd& beta) {
    const Eigen::Index n = beta.size() / row.f.size();
    if (n * row.f.size() != beta.size()) throw DomainError("beta length is not a multiple of the design row");
    Eigen::VectorXd out(n);
    apply_design(row.f, {beta.data(), static_cast<std::size_t>(beta.size())},
                 {out.data(), static_cast<std::size_t>(n)});
    return out;
}

}  // namespace bdarma
