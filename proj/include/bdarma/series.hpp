#pragma once

#include "bdarma/calendar.hpp"
#include "bdarma/simplex.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bdarma {

// Calendar-indexed panel of compositions. Row i holds month start + i, whose
// global month index is first_index + i (1 for the first month of the full
// dataset). Prefix windows keep the global indices of the full series.
class CompositionalSeries {
public:
    CompositionalSeries(PartSetPtr parts, YearMonth start, Eigen::MatrixXd shares,
                        int first_index = 1);

    const PartSetPtr& parts() const { return parts_; }
    std::size_t n_parts() const { return parts_->size(); }
    std::size_t size() const { return static_cast<std::size_t>(shares_.rows()); }

    const Eigen::MatrixXd& shares() const { return shares_; }
    Composition at(std::size_t row) const;

    YearMonth start() const { return start_; }
    YearMonth date(std::size_t row) const { return start_.plus_months(static_cast<int>(row)); }
    int first_index() const { return first_index_; }
    int global_index(std::size_t row) const { return first_index_ + static_cast<int>(row); }

    // Row of a calendar month, or -1 when outside the series.
    long row_of(const YearMonth& month) const;

    // First n rows, global indices preserved.
    CompositionalSeries prefix(std::size_t n) const;

    // FNV-1a hash of the raw bytes of rows [0, n); used for no-leakage checks.
    std::uint64_t content_hash(std::size_t n) const;

private:
    PartSetPtr parts_;
    YearMonth start_;
    Eigen::MatrixXd shares_;
    int first_index_;
};

}  // namespace bdarma
