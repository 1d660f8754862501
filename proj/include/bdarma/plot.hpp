#pragma once

#include "bdarma/backtest.hpp"
#include "bdarma/series.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bdarma::plot {

// Fan chart for one component: recent history, each model's median line and
// the 90% band of `band_model`. Axes are fitted to the panel's own data.
std::string fan_chart_svg(const CompositionalSeries& history, std::size_t component,
                          const std::vector<backtest::QuantileRow>& rows, int history_months = 36,
                          const std::string& band_model = "bdarma");

// Writes one "fan_<label>.svg" per component into `dir`; returns the paths.
std::vector<std::filesystem::path> write_fan_charts(const std::filesystem::path& dir,
                                                    const CompositionalSeries& history,
                                                    const std::vector<backtest::QuantileRow>& rows,
                                                    int history_months = 36);

}  // namespace bdarma::plot
