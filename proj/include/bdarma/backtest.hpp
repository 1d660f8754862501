#pragma once

#include "bdarma/calendar.hpp"
#include "bdarma/fan.hpp"
#include "bdarma/hmc.hpp"
#include "bdarma/scoring.hpp"
#include "bdarma/seasonal.hpp"
#include "bdarma/series.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace bdarma::backtest {

// Model identifiers, in report column order.
inline const std::vector<std::string>& all_models() {
    static const std::vector<std::string> models{"bdarma", "tvar2", "snaive", "alrrw"};
    return models;
}

// Throws DomainError for unknown ids; returns ids in canonical order without
// duplicates.
std::vector<std::string> normalize_models(const std::vector<std::string>& requested);

struct ProtocolSpec {
    YearMonth first_origin{2019, 1};
    YearMonth last_origin{2024, 1};
    int horizon = 12;
    std::size_t fan_size = 2000;
    std::vector<std::string> models = all_models();
    std::uint64_t seed = 20250101;
    double coverage_level = 0.9;
};

struct ModelConfig {
    FourierSpec fourier;
    hmc::HmcConfig hmc;
    // Origins processed concurrently (chains parallelize inside each origin).
    int workers = 1;
    // Start each origin's sampler from the previous origin's adapted step
    // size and mass matrix. Forces sequential origins.
    bool warm_start = false;
};

// 0-based rows of each origin, consecutive months from first to last
// inclusive. Throws ProtocolError when an origin lacks H months of
// look-ahead or predates twelve months of history.
std::vector<std::size_t> enumerate_origins(const ProtocolSpec& spec, const CompositionalSeries& series);

struct CellError {
    YearMonth origin;
    std::string model;
    std::string message;
};

struct OriginArtifact {
    YearMonth origin;
    std::size_t window_rows = 0;
    std::uint64_t window_hash = 0;
    double wall_seconds = 0.0;
    nlohmann::json diagnostics = nlohmann::json::object();  // per model
};

struct RollingResult {
    std::vector<scoring::ScoreRecord> records;  // sorted by (origin, model, h)
    std::vector<CellError> errors;
    std::vector<OriginArtifact> origins;

    bool ok() const { return errors.empty(); }
};

// Receives every generated fan set (for optional binary dumps).
using FanSink = std::function<void(const YearMonth& origin, const std::string& model, const ForecastFan&)>;

// Generates one model's fan from the estimation window (rows [0, origin_row]).
// `diagnostics` receives sampler summaries where applicable.
ForecastFan model_fan(const std::string& model, const CompositionalSeries& window, int horizon,
                      std::size_t fan_size, const ModelConfig& config, std::uint64_t seed,
                      nlohmann::json* diagnostics = nullptr,
                      const hmc::ChainDiagnostics* warm = nullptr,
                      hmc::ChainDiagnostics* adapted = nullptr);

// Seed for one (model, origin) cell; independent of which other models run.
std::uint64_t cell_seed(std::uint64_t seed, const std::string& model, const YearMonth& origin);

RollingResult run_rolling(const ProtocolSpec& spec, const CompositionalSeries& series,
                          const ModelConfig& config, const FanSink& sink = {});

struct QuantileRow {
    std::string model;
    int horizon = 1;
    YearMonth date;
    std::string component;
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
};

struct FixedOriginResult {
    std::vector<std::string> models;
    std::vector<ForecastFan> fans;  // parallel to models
    std::vector<QuantileRow> quantiles;
    std::vector<CellError> errors;
    nlohmann::json diagnostics = nlohmann::json::object();
};

// Fits every model on the complete series and forecasts H months ahead.
FixedOriginResult run_fixed_origin(const CompositionalSeries& series, int horizon,
                                   std::size_t fan_size, const std::vector<std::string>& models,
                                   const ModelConfig& config, std::uint64_t seed);

// Quantile CSV: model,h,date,component,q05,q50,q95
void write_quantiles_csv(std::ostream& out, const std::vector<QuantileRow>& rows);
std::vector<QuantileRow> read_quantiles_csv(std::istream& in);

// Binary fan dump: three little-endian uint64 (M, H, J) followed by M*H*J
// little-endian float64 values ordered by horizon, member, component.
void write_fan_binary(const std::filesystem::path& path, const ForecastFan& fan);
ForecastFan read_fan_binary(const std::filesystem::path& path, const PartSetPtr& parts);

}  // namespace bdarma::backtest
