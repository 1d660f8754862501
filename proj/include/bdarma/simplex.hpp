#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bdarma {

// The labelled parts of a composition and the ALR reference part.
// Shared (immutable) between every Composition of a series so that
// compatibility checks are a pointer comparison in the common case.
class PartSet {
public:
    PartSet(std::vector<std::string> labels, std::size_t reference_index);

    std::size_t size() const { return labels_.size(); }
    std::size_t reference_index() const { return reference_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(std::size_t j) const { return labels_.at(j); }

    // Index of the composition part that ALR coordinate k maps to
    // (label order with the reference removed).
    std::size_t part_of_coord(std::size_t k) const { return k < reference_ ? k : k + 1; }

    bool operator==(const PartSet& other) const = default;

private:
    std::vector<std::string> labels_;
    std::size_t reference_;
};

using PartSetPtr = std::shared_ptr<const PartSet>;

PartSetPtr make_parts(std::vector<std::string> labels, std::size_t reference_index);

// Default labels "x1".."xJ" with the last part as reference.
PartSetPtr default_parts(std::size_t n_parts);

// Throws IncompatibleComposition unless a and b describe the same parts.
void require_same_parts(const PartSetPtr& a, const PartSetPtr& b);

// A point on the open unit simplex.
class Composition {
public:
    // Validates the invariants (positive parts summing to one within 1e-10).
    Composition(PartSetPtr parts, Eigen::VectorXd shares);

    const PartSetPtr& parts() const { return parts_; }
    const Eigen::VectorXd& shares() const { return shares_; }
    double operator[](std::size_t j) const { return shares_(static_cast<Eigen::Index>(j)); }
    std::size_t size() const { return static_cast<std::size_t>(shares_.size()); }

private:
    PartSetPtr parts_;
    Eigen::VectorXd shares_;
};

class AlrVector {
public:
    AlrVector(PartSetPtr parts, Eigen::VectorXd coords);

    const PartSetPtr& parts() const { return parts_; }
    const Eigen::VectorXd& coords() const { return coords_; }
    std::size_t size() const { return static_cast<std::size_t>(coords_.size()); }

private:
    PartSetPtr parts_;
    Eigen::VectorXd coords_;
};

// Normalizes raw positive quantities to the simplex. Any entry <= 0 (or
// non-finite) raises ZeroComponent naming the part.
Composition closure(const PartSetPtr& parts, std::span<const double> raw);
Composition closure(const PartSetPtr& parts, const Eigen::VectorXd& raw);

// Adds eps to every entry, then closes. The documented zero-replacement rule
// for datasets containing exact zeros.
Composition closure_with_replacement(const PartSetPtr& parts, std::span<const double> raw,
                                     double eps = 1e-6);

AlrVector alr(const Composition& y);
Composition alr_inv(const AlrVector& e);
Eigen::VectorXd clr(const Composition& y);

// ||clr(y) - clr(mu)||_2 / sqrt(J)
double aitchison_rmse_distance(const Composition& y, const Composition& mu);

namespace detail {

// Unchecked kernels on raw vectors, shared by the hot paths.
void alr_into(std::span<const double> shares, std::size_t reference, std::span<double> coords);
void alr_inv_into(std::span<const double> coords, std::size_t reference, std::span<double> shares);
void clr_into(std::span<const double> shares, std::span<double> out);

}  // namespace detail

}  // namespace bdarma
