#pragma once

#include "bdarma/backtest.hpp"
#include "bdarma/hmc.hpp"
#include "bdarma/model.hpp"
#include "bdarma/seasonal.hpp"
#include "bdarma/series.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bdarma::io {

struct IngestOptions {
    // Reference part label; empty selects the last column.
    std::string reference;
    // Apply the +1e-6 zero replacement instead of rejecting zero quantities.
    bool replace_zeros = false;
    double replacement_eps = 1e-6;
};

// Reads a dataset CSV: a header "date,<label>,...,<label>" followed by one row
// per month (YYYY-MM) of nonnegative raw quantities. Rows are closed to
// compositions; the first row gets global month index 1.
CompositionalSeries ingest(const std::filesystem::path& path, const IngestOptions& options = {});
CompositionalSeries ingest(std::istream& in, const IngestOptions& options = {},
                           const std::string& source = "<stream>");

// Writes the series in the same layout (shares as raw quantities, 17
// significant digits).
void write_dataset(std::ostream& out, const CompositionalSeries& series);

// Generating parameters for the simulator, as read from a JSON file:
//   { "labels": [...], "reference": "bio", "start": "2010-01",
//     "fourier": {"period": 12, "n_harmonics": 5},
//     "A1": [[...]], "A2": [[...]], "beta": [[...] per coordinate], "gamma": [...] }
struct SimulationParams {
    PartSetPtr parts;
    YearMonth start{2010, 1};
    FourierSpec fourier;
    BdarmaParams params;
};

SimulationParams parse_simulation_params(const nlohmann::json& doc);
nlohmann::json simulation_params_json(const SimulationParams& sim);

// Posterior draws as CSV: chain_id then parameters in packing order.
void write_draws_csv(std::ostream& out, const hmc::PosteriorDraws& draws,
                     const std::vector<std::string>& names);
hmc::PosteriorDraws read_draws_csv(std::istream& in);

// Run configuration. Every field can be set from the JSON config file and
// overridden on the command line.
struct RunConfig {
    std::filesystem::path data_path;
    std::string reference;  // label; empty = last column
    bool replace_zeros = false;
    FourierSpec fourier;
    hmc::HmcConfig hmc;
    backtest::ProtocolSpec protocol;
    std::filesystem::path output_root = "runs";
    bool budget = false;
    int workers = 1;
    bool warm_start = false;
    bool plots = true;
    bool dump_fans = false;

    // Shrinks the experiment for CI: six origins, 200+200 iterations per
    // chain, M = 800.
    void apply_budget_profile();

    nlohmann::json to_json() const;
    // Fields absent from the document keep their current values. Throws
    // SchemaError naming the offending field path.
    void merge_json(const nlohmann::json& doc);

    // Hex FNV-1a of the canonical JSON form, excluding the output root and
    // worker count (neither changes results).
    std::string hash() const;
    // <output root>/<command>-<hash>
    std::filesystem::path run_directory(const std::string& command) const;
};

RunConfig load_config(const std::filesystem::path& path);

}  // namespace bdarma::io
