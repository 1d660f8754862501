#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace bdarma {

// Harmonic seasonal basis: intercept plus n_harmonics sine/cosine pairs of
// the given period.
struct FourierSpec {
    int period = 12;
    int n_harmonics = 5;

    FourierSpec() = default;
    FourierSpec(int period, int n_harmonics);  // validates 1 <= K, 2K < period

    // 1 + 2K
    int row_size() const { return 1 + 2 * n_harmonics; }
};

// f_t = (1, sin(2 pi t/P), cos(2 pi t/P), ..., sin(2 pi K t/P), cos(2 pi K t/P))
struct DesignRow {
    Eigen::VectorXd f;
    int t_index = 0;
};

DesignRow fourier_row(int t, const FourierSpec& spec);

// Rows for global indices first, first+1, ..., first+count-1.
std::vector<DesignRow> fourier_rows(int first, std::size_t count, const FourierSpec& spec);

// Dense X_t = I_n (x) f_t^T, an n x n(1+2K) matrix. Test/reference use only.
Eigen::MatrixXd block_design(const DesignRow& row, int n_coords);

// X_t beta evaluated slice-wise: out[j] = dot(f, beta[jP : (j+1)P]).
void apply_design(const Eigen::VectorXd& f, std::span<const double> beta, std::span<double> out);
Eigen::VectorXd apply_design(const DesignRow& row, const Eigen::VectorXd& beta);

}  // namespace bdarma
