#include "bdarma/simplex.hpp"

#include "bdarma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace bdarma {

PartSet::PartSet(std::vector<std::string> labels, std::size_t reference_index)
    : labels_(std::move(labels)), reference_(reference_index) {
    if (labels_.size() < 2) throw DomainError("a composition needs at least two parts");
    if (reference_ >= labels_.size()) {
        throw DomainError("reference index " + std::to_string(reference_) +
                          " out of range for " + std::to_string(labels_.size()) + " parts");
    }
    std::set<std::string> seen;
    for (const auto& label : labels_) {
        if (!seen.insert(label).second) throw DomainError("duplicate part label '" + label + "'");
    }
}

PartSetPtr make_parts(std::vector<std::string> labels, std::size_t reference_index) {
    return std::make_shared<const PartSet>(std::move(labels), reference_index);
}

PartSetPtr default_parts(std::size_t n_parts) {
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < n_parts; ++j) labels.push_back("x" + std::to_string(j + 1));
    return make_parts(std::move(labels), n_parts - 1);
}

void require_same_parts(const PartSetPtr& a, const PartSetPtr& b) {
    if (a == b) return;
    if (!a || !b || !(*a == *b)) {
        throw IncompatibleComposition("compositions have different parts or reference");
    }
}

Composition::Composition(PartSetPtr parts, Eigen::VectorXd shares)
    : parts_(std::move(parts)), shares_(std::move(shares)) {
    if (!parts_) throw DomainError("composition without parts");
    if (static_cast<std::size_t>(shares_.size()) != parts_->size()) {
        throw IncompatibleComposition("share vector length " + std::to_string(shares_.size()) +
                                      " does not match " + std::to_string(parts_->size()) +
                                      " parts");
    }
    for (Eigen::Index j = 0; j < shares_.size(); ++j) {
        if (!(shares_(j) > 0.0) || !std::isfinite(shares_(j))) {
            throw DomainError("share of '" + parts_->label(static_cast<std::size_t>(j)) +
                              "' is not strictly positive");
        }
    }
    if (std::fabs(shares_.sum() - 1.0) > 1e-10) {
        throw DomainError("shares do not sum to one");
    }
}

AlrVector::AlrVector(PartSetPtr parts, Eigen::VectorXd coords)
    : parts_(std::move(parts)), coords_(std::move(coords)) {
    if (!parts_) throw DomainError("ALR vector without parts");
    if (static_cast<std::size_t>(coords_.size()) + 1 != parts_->size()) {
        throw IncompatibleComposition("ALR vector length does not match parts");
    }
    if (!coords_.allFinite()) throw DomainError("ALR coordinates must be finite");
}

namespace {

Eigen::VectorXd checked_raw(const PartSetPtr& parts, std::span<const double> raw) {
    if (raw.size() != parts->size()) {
        throw IncompatibleComposition("raw vector length " + std::to_string(raw.size()) +
                                      " does not match " + std::to_string(parts->size()) +
                                      " parts");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(raw.size()));
    for (std::size_t j = 0; j < raw.size(); ++j) v(static_cast<Eigen::Index>(j)) = raw[j];
    return v;
}

Composition close_positive(const PartSetPtr& parts, Eigen::VectorXd v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (!(v(j) > 0.0) || !std::isfinite(v(j))) {
            throw ZeroComponent("component '" + parts->label(static_cast<std::size_t>(j)) +
                                "' is not strictly positive");
        }
    }
    v /= v.sum();
    // Exact renormalization can leave the sum one ulp off; that is within the
    // invariant tolerance.
    return Composition(parts, std::move(v));
}

}  // namespace

Composition closure(const PartSetPtr& parts, std::span<const double> raw) {
    return close_positive(parts, checked_raw(parts, raw));
}

Composition closure(const PartSetPtr& parts, const Eigen::VectorXd& raw) {
    return closure(parts, std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())));
}

Composition closure_with_replacement(const PartSetPtr& parts, std::span<const double> raw,
                                     double eps) {
    Eigen::VectorXd v = checked_raw(parts, raw);
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (v(j) < 0.0 || !std::isfinite(v(j))) {
            throw ZeroComponent("component '" + parts->label(static_cast<std::size_t>(j)) +
                                "' is negative or non-finite");
        }
    }
    v.array() += eps;
    return close_positive(parts, std::move(v));
}

namespace detail {

void alr_into(std::span<const double> shares, std::size_t reference, std::span<double> coords) {
    const double log_ref = std::log(shares[reference]);
    std::size_t k = 0;
    for (std::size_t j = 0; j < shares.size(); ++j) {
        if (j == reference) continue;
        coords[k++] = std::log(shares[j]) - log_ref;
    }
}

void alr_inv_into(std::span<const double> coords, std::size_t reference, std::span<double> shares) {
    // Softmax over (coords, 0 for the reference) with max subtraction.
    double max_coord = 0.0;
    for (double c : coords) max_coord = std::max(max_coord, c);
    double total = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j < shares.size(); ++j) {
        const double value = (j == reference) ? std::exp(-max_coord) : std::exp(coords[k++] - max_coord);
        shares[j] = value;
        total += value;
    }
    for (double& s : shares) s /= total;
}

void clr_into(std::span<const double> shares, std::span<double> out) {
    double mean_log = 0.0;
    for (std::size_t j = 0; j < shares.size(); ++j) {
        out[j] = std::log(shares[j]);
        mean_log += out[j];
    }
    mean_log /= static_cast<double>(shares.size());
    for (double& v : out) v -= mean_log;
}

}  // namespace detail

AlrVector alr(const Composition& y) {
    Eigen::VectorXd coords(static_cast<Eigen::Index>(y.size() - 1));
    detail::alr_into({y.shares().data(), y.size()}, y.parts()->reference_index(),
                     {coords.data(), static_cast<std::size_t>(coords.size())});
    return AlrVector(y.parts(), std::move(coords));
}

Composition alr_inv(const AlrVector& e) {
    Eigen::VectorXd shares(static_cast<Eigen::Index>(e.size() + 1));
    detail::alr_inv_into({e.coords().data(), e.size()}, e.parts()->reference_index(),
                         {shares.data(), static_cast<std::size_t>(shares.size())});
    // A part can underflow to exactly zero for extreme coordinates (spread
    // beyond ~745 log units). Floor it at the smallest normal double so the
    // result stays on the open simplex.
    for (Eigen::Index j = 0; j < shares.size(); ++j) {
        shares(j) = std::max(shares(j), std::numeric_limits<double>::min());
    }
    return Composition(e.parts(), std::move(shares));
}

Eigen::VectorXd clr(const Composition& y) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(y.size()));
    detail::clr_into({y.shares().data(), y.size()}, {out.data(), y.size()});
    return out;
}

double aitchison_rmse_distance(const Composition& y, const Composition& mu) {
    require_same_parts(y.parts(), mu.parts());
    return (clr(y) - clr(mu)).norm() / std::sqrt(static_cast<double>(y.size()));
}

}  // namespace bdarma
