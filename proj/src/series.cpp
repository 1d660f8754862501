#include "bdarma/series.hpp"

#include "bdarma/errors.hpp"

#include <cmath>
#include <cstring>

namespace bdarma {

CompositionalSeries::CompositionalSeries(PartSetPtr parts, YearMonth start, Eigen::MatrixXd shares,
                                         int first_index)
    : parts_(std::move(parts)), start_(start), shares_(std::move(shares)), first_index_(first_index) {
    if (!parts_) throw DomainError("series without parts");
    if (static_cast<std::size_t>(shares_.cols()) != parts_->size()) {
        throw IncompatibleComposition("series has " + std::to_string(shares_.cols()) +
                                      " columns for " + std::to_string(parts_->size()) + " parts");
    }
    for (Eigen::Index t = 0; t < shares_.rows(); ++t) {
        for (Eigen::Index j = 0; j < shares_.cols(); ++j) {
            if (!(shares_(t, j) > 0.0) || !std::isfinite(shares_(t, j))) {
                throw ZeroComponent("row " + std::to_string(t + 1) + ", component '" +
                                    parts_->label(static_cast<std::size_t>(j)) +
                                    "' is not strictly positive");
            }
        }
        if (std::fabs(shares_.row(t).sum() - 1.0) > 1e-10) {
            throw DomainError("row " + std::to_string(t + 1) + " does not sum to one");
        }
    }
}

Composition CompositionalSeries::at(std::size_t row) const {
    return Composition(parts_, shares_.row(static_cast<Eigen::Index>(row)).transpose());
}

long CompositionalSeries::row_of(const YearMonth& month) const {
    const int offset = month.months_since(start_);
    if (offset < 0 || offset >= static_cast<int>(size())) return -1;
    return offset;
}

CompositionalSeries CompositionalSeries::prefix(std::size_t n) const {
    if (n > size()) throw OutOfRange("prefix longer than series");
    return CompositionalSeries(parts_, start_, shares_.topRows(static_cast<Eigen::Index>(n)),
                               first_index_);
}

std::uint64_t CompositionalSeries::content_hash(std::size_t n) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t t = 0; t < n && t < size(); ++t) {
        const int idx = global_index(t);
        feed(&idx, sizeof idx);
        for (Eigen::Index j = 0; j < shares_.cols(); ++j) {
            const double v = shares_(static_cast<Eigen::Index>(t), j);
            feed(&v, sizeof v);
        }
    }
    return h;
}

}  // namespace bdarma
