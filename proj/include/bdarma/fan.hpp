#pragma once

#include "bdarma/simplex.hpp"

#include <Eigen/Dense>

#include <vector>

namespace bdarma {

// Monte-Carlo predictive sample at one horizon: M compositions stored as the
// rows of an M x J matrix.
struct Fan {
    PartSetPtr parts;
    Eigen::MatrixXd draws;

    std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
    std::size_t n_parts() const { return static_cast<std::size_t>(draws.cols()); }
    Composition member(std::size_t m) const {
        return Composition(parts, draws.row(static_cast<Eigen::Index>(m)).transpose());
    }

    // M identical copies of one composition.
    static Fan degenerate(const Composition& point, std::size_t m);
};

// One Fan per horizon h = 1..H (index h-1).
using ForecastFan = std::vector<Fan>;

inline Fan Fan::degenerate(const Composition& point, std::size_t m) {
    Fan fan{point.parts(), Eigen::MatrixXd(static_cast<Eigen::Index>(m),
                                           static_cast<Eigen::Index>(point.size()))};
    fan.draws.rowwise() = point.shares().transpose();
    return fan;
}

}  // namespace bdarma
