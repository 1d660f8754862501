#pragma once

#include "bdarma/rng.hpp"
#include "bdarma/simplex.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>

namespace testing {

inline nlohmann::json load_fixture(const std::string& name) {
    std::ifstream in(std::string(BDARMA_FIXTURES) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    return nlohmann::json::parse(in);
}

inline Eigen::VectorXd to_vector(const nlohmann::json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

// Uniform-ish random interior composition with occasional extreme shares.
inline bdarma::Composition random_composition(const bdarma::PartSetPtr& parts, bdarma::Rng& rng) {
    Eigen::VectorXd raw(static_cast<Eigen::Index>(parts->size()));
    for (Eigen::Index j = 0; j < raw.size(); ++j) raw(j) = std::exp(4.0 * (rng.uniform() - 0.5));
    return bdarma::closure(parts, raw);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testing
