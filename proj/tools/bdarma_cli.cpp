// bdarma: rolling backtests, fixed-origin forecasts, synthetic data and lag
// diagnostics for monthly compositional series.

#include "bdarma/backtest.hpp"
#include "bdarma/baselines.hpp"
#include "bdarma/errors.hpp"
#include "bdarma/io.hpp"
#include "bdarma/model.hpp"
#include "bdarma/plot.hpp"
#include "bdarma/scoring.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kPartial = 3 };

void say(const std::string& line) {
    std::cout << "[bdarma] " << line << std::endl;
}

void fail(const std::string& line) {
    std::cerr << "bdarma: " << line << std::endl;
}

// Flag values; each is applied only when given on the command line.
struct Overrides {
    std::string config;
    std::string data;
    std::string reference;
    bool replace_zeros = false;
    int period = 12;
    int harmonics = 5;
    int chains = 4;
    int warmup = 500;
    int keep = 500;
    double target_accept = 0.8;
    int max_leapfrog = 256;
    std::uint64_t hmc_seed = 1;
    std::string first_origin;
    std::string last_origin;
    int horizon = 12;
    std::size_t fan_size = 2000;
    std::vector<std::string> models;
    std::uint64_t seed = 20250101;
    std::string output;
    bool budget = false;
    int workers = 1;
    bool warm_start = false;
    bool no_plots = false;
    bool dump_fans = false;

    std::map<std::string, CLI::Option*> opts;

    bool given(const std::string& name) const {
        const auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

void add_common(CLI::App* cmd, Overrides& o, bool protocol) {
    o.opts["config"] = cmd->add_option("-c,--config", o.config, "JSON run configuration");
    o.opts["data"] = cmd->add_option("-d,--data", o.data, "Dataset CSV (date,<labels>...)");
    o.opts["reference"] = cmd->add_option("--reference", o.reference, "ALR reference label (default: last column)");
    o.opts["replace-zeros"] = cmd->add_flag("--replace-zeros", o.replace_zeros, "Replace zero quantities by 1e-6");
    o.opts["period"] = cmd->add_option("--period", o.period, "Seasonal period");
    o.opts["harmonics"] = cmd->add_option("--harmonics", o.harmonics, "Fourier harmonics K");
    o.opts["output"] = cmd->add_option("-o,--output", o.output, "Output root directory");
    if (!protocol) return;
    o.opts["chains"] = cmd->add_option("--chains", o.chains, "HMC chains");
    o.opts["warmup"] = cmd->add_option("--warmup", o.warmup, "Warmup iterations per chain");
    o.opts["keep"] = cmd->add_option("--keep", o.keep, "Kept iterations per chain");
    o.opts["target-accept"] = cmd->add_option("--target-accept", o.target_accept, "Dual-averaging target");
    o.opts["max-leapfrog"] = cmd->add_option("--max-leapfrog", o.max_leapfrog, "Leapfrog step cap");
    o.opts["hmc-seed"] = cmd->add_option("--hmc-seed", o.hmc_seed, "Sampler seed (single fits)");
    o.opts["horizon"] = cmd->add_option("-H,--horizon", o.horizon, "Forecast horizon in months");
    o.opts["fan-size"] = cmd->add_option("-M,--fan-size", o.fan_size, "Monte-Carlo fan size");
    o.opts["models"] = cmd->add_option("--models", o.models, "Comma-separated models: bdarma,tvar2,snaive,alrrw")
                           ->delimiter(',');
    o.opts["seed"] = cmd->add_option("--seed", o.seed, "Protocol seed");
    o.opts["workers"] = cmd->add_option("--workers", o.workers, "Origins processed concurrently");
    o.opts["warm-start"] = cmd->add_flag("--warm-start", o.warm_start, "Reuse adaptation across origins");
    o.opts["budget"] = cmd->add_flag("--budget", o.budget, "Budget profile: 6 origins, 200+200 iterations, M=800");
    o.opts["no-plots"] = cmd->add_flag("--no-plots", o.no_plots, "Skip fan-chart files");
    o.opts["dump-fans"] = cmd->add_flag("--dump-fans", o.dump_fans, "Write binary fan dumps");
}

void add_origins(CLI::App* cmd, Overrides& o) {
    o.opts["first-origin"] = cmd->add_option("--first-origin", o.first_origin, "First forecast origin (YYYY-MM)");
    o.opts["last-origin"] = cmd->add_option("--last-origin", o.last_origin, "Last forecast origin (YYYY-MM)");
}

bdarma::io::RunConfig resolve(const Overrides& o) {
    using bdarma::YearMonth;
    bdarma::io::RunConfig cfg;
    if (o.given("config")) cfg = bdarma::io::load_config(o.config);
    if (o.given("data")) cfg.data_path = o.data;
    if (o.given("reference")) cfg.reference = o.reference;
    if (o.given("replace-zeros")) cfg.replace_zeros = o.replace_zeros;
    if (o.given("period") || o.given("harmonics")) {
        cfg.fourier = bdarma::FourierSpec(o.given("period") ? o.period : cfg.fourier.period,
                                          o.given("harmonics") ? o.harmonics : cfg.fourier.n_harmonics);
    }
    if (o.given("output")) cfg.output_root = o.output;
    // The budget profile sets defaults that explicit flags still override.
    if (o.given("budget") && o.budget) cfg.apply_budget_profile();
    if (o.given("chains")) cfg.hmc.n_chains = o.chains;
    if (o.given("warmup")) cfg.hmc.n_warmup = o.warmup;
    if (o.given("keep")) cfg.hmc.n_keep = o.keep;
    if (o.given("target-accept")) cfg.hmc.target_accept = o.target_accept;
    if (o.given("max-leapfrog")) cfg.hmc.max_leapfrog = o.max_leapfrog;
    if (o.given("hmc-seed")) cfg.hmc.seed = o.hmc_seed;
    if (o.given("first-origin")) cfg.protocol.first_origin = YearMonth::parse(o.first_origin);
    if (o.given("last-origin")) cfg.protocol.last_origin = YearMonth::parse(o.last_origin);
    if (o.given("horizon")) cfg.protocol.horizon = o.horizon;
    if (o.given("fan-size")) cfg.protocol.fan_size = o.fan_size;
    if (o.given("models")) cfg.protocol.models = o.models;
    if (o.given("seed")) cfg.protocol.seed = o.seed;
    if (o.given("workers")) cfg.workers = o.workers;
    if (o.given("warm-start")) cfg.warm_start = o.warm_start;
    if (o.given("no-plots")) cfg.plots = !o.no_plots;
    if (o.given("dump-fans")) cfg.dump_fans = o.dump_fans;

    cfg.protocol.models = bdarma::backtest::normalize_models(cfg.protocol.models);
    cfg.hmc.validate();
    if (cfg.protocol.horizon < 1) throw bdarma::DomainError("horizon must be at least one");
    if (cfg.protocol.fan_size < 1) throw bdarma::DomainError("fan size must be at least one");
    if (cfg.workers < 1) throw bdarma::DomainError("workers must be at least one");
    if (cfg.data_path.empty()) throw bdarma::DataError("no data file given (use --data or the config's \"data\")");
    return cfg;
}

bdarma::CompositionalSeries load_series(const bdarma::io::RunConfig& cfg) {
    bdarma::io::IngestOptions opt;
    opt.reference = cfg.reference;
    opt.replace_zeros = cfg.replace_zeros;
    return bdarma::io::ingest(cfg.data_path, opt);
}

bdarma::backtest::ModelConfig model_config(const bdarma::io::RunConfig& cfg) {
    bdarma::backtest::ModelConfig mc;
    mc.fourier = cfg.fourier;
    mc.hmc = cfg.hmc;
    mc.workers = cfg.workers;
    mc.warm_start = cfg.warm_start;
    return mc;
}

std::filesystem::path prepare_dir(const bdarma::io::RunConfig& cfg, const std::string& command) {
    const std::filesystem::path dir = cfg.run_directory(command);
    std::filesystem::create_directories(dir);
    return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bdarma::Error("cannot write " + path.string());
    return out;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::json base_manifest(const bdarma::io::RunConfig& cfg, const bdarma::CompositionalSeries& series,
                             const std::string& command) {
    return {{"tool", "bdarma"},
            {"version", kVersion},
            {"command", command},
            {"config", cfg.to_json()},
            {"config_hash", cfg.hash()},
            {"data",
             {{"path", cfg.data_path.string()},
              {"rows", series.size()},
              {"first", series.date(0).to_string()},
              {"last", series.date(series.size() - 1).to_string()},
              {"labels", series.parts()->labels()},
              {"reference", series.parts()->label(series.parts()->reference_index())},
              {"content_hash", hex(series.content_hash(series.size()))}}}};
}

int cmd_backtest(const Overrides& o) {
    const auto cfg = resolve(o);
    const auto series = load_series(cfg);
    const auto dir = prepare_dir(cfg, "backtest");
    say("backtest: " + std::to_string(series.size()) + " months, origins " + cfg.protocol.first_origin.to_string() +
        ".." + cfg.protocol.last_origin.to_string() + ", output " + dir.string());

    bdarma::backtest::FanSink sink;
    if (cfg.dump_fans) {
        std::filesystem::create_directories(dir / "fans");
        sink = [&dir](const bdarma::YearMonth& origin, const std::string& model, const bdarma::ForecastFan& fan) {
            bdarma::backtest::write_fan_binary(dir / "fans" / (model + "_" + origin.to_string() + ".bin"), fan);
        };
    }
    const auto start = std::chrono::steady_clock::now();
    const auto result = bdarma::backtest::run_rolling(cfg.protocol, series, model_config(cfg), sink);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    {
        auto out = open_out(dir / "scores.csv");
        bdarma::scoring::write_scores_csv(out, result.records);
    }
    {
        auto out = open_out(dir / "errors.csv");
        out << "origin,model,message\n";
        for (const auto& e : result.errors) {
            std::string msg = e.message;
            for (char& c : msg) {
                if (c == '\n' || c == ',') c = ' ';
            }
            out << e.origin.to_string() << ',' << e.model << ',' << msg << '\n';
        }
    }
    const auto table = bdarma::scoring::aggregate_by_horizon(result.records);
    {
        auto out = open_out(dir / "aggregate.csv");
        bdarma::scoring::write_aggregate_csv(out, table);
    }
    const std::string text = bdarma::scoring::format_aggregate_text(table);
    {
        auto out = open_out(dir / "aggregate.txt");
        out << text;
    }
    {
        auto out = open_out(dir / "component_coverage.csv");
        bdarma::scoring::write_component_coverage_csv(out, table, series.parts()->labels());
    }

    nlohmann::json manifest = base_manifest(cfg, series, "backtest");
    manifest["wall_seconds"] = wall;
    nlohmann::json origins = nlohmann::json::array();
    for (const auto& a : result.origins) {
        nlohmann::json seeds = nlohmann::json::object();
        for (const auto& m : cfg.protocol.models) seeds[m] = bdarma::backtest::cell_seed(cfg.protocol.seed, m, a.origin);
        origins.push_back({{"origin", a.origin.to_string()},
                           {"window_rows", a.window_rows},
                           {"window_hash", hex(a.window_hash)},
                           {"wall_seconds", a.wall_seconds},
                           {"seeds", seeds},
                           {"diagnostics", a.diagnostics}});
    }
    manifest["origins"] = origins;
    manifest["errors"] = result.errors.size();
    manifest["artifacts"] = {"scores.csv", "errors.csv", "aggregate.csv", "aggregate.txt", "component_coverage.csv"};
    {
        auto out = open_out(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
    }

    std::cout << text;
    for (const auto& e : result.errors) {
        fail("cell " + e.origin.to_string() + "/" + e.model + " failed: " + e.message);
    }
    say("wrote " + dir.string());
    return result.ok() ? kOk : kPartial;
}

int cmd_forecast(const Overrides& o) {
    const auto cfg = resolve(o);
    const auto series = load_series(cfg);
    const auto dir = prepare_dir(cfg, "forecast");
    const int horizon = cfg.protocol.horizon;
    say("forecast: origin " + series.date(series.size() - 1).to_string() + ", H=" + std::to_string(horizon) +
        ", output " + dir.string());
    const auto result = bdarma::backtest::run_fixed_origin(series, horizon, cfg.protocol.fan_size,
                                                           cfg.protocol.models, model_config(cfg), cfg.protocol.seed);
    {
        auto out = open_out(dir / "quantiles.csv");
        bdarma::backtest::write_quantiles_csv(out, result.quantiles);
    }
    std::vector<std::string> files{"quantiles.csv"};
    if (cfg.plots) {
        for (const auto& p : bdarma::plot::write_fan_charts(dir, series, result.quantiles)) {
            files.push_back(p.filename().string());
        }
    }
    if (cfg.dump_fans) {
        for (std::size_t i = 0; i < result.models.size(); ++i) {
            const std::string name = "fan_" + result.models[i] + ".bin";
            bdarma::backtest::write_fan_binary(dir / name, result.fans[i]);
            files.push_back(name);
        }
    }
    nlohmann::json manifest = base_manifest(cfg, series, "forecast");
    nlohmann::json seeds = nlohmann::json::object();
    for (const auto& m : cfg.protocol.models) {
        seeds[m] = bdarma::backtest::cell_seed(cfg.protocol.seed, m, series.date(series.size() - 1));
    }
    manifest["seeds"] = seeds;
    manifest["diagnostics"] = result.diagnostics;
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : result.errors) errors.push_back({{"model", e.model}, {"message", e.message}});
    manifest["errors"] = errors;
    manifest["artifacts"] = files;
    {
        auto out = open_out(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
    }
    for (const auto& e : result.errors) fail("model " + e.model + " failed: " + e.message);
    say("wrote " + dir.string());
    return result.errors.empty() ? kOk : kPartial;
}

struct SimulateArgs {
    std::string params;
    int length = 181;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    std::ifstream in(a.params);
    if (!in) throw bdarma::DataError("cannot open params file " + a.params);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw bdarma::SchemaError(a.params + ": " + e.what());
    }
    const auto sim = bdarma::io::parse_simulation_params(doc);
    if (a.length < 1) throw bdarma::DomainError("length must be positive");
    bdarma::Rng rng(a.seed);
    const auto series = bdarma::simulate_series(sim.params, a.length, sim.parts, sim.fourier, sim.start, rng);
    {
        auto out = open_out(a.out);
        bdarma::io::write_dataset(out, series);
    }
    nlohmann::json meta = {{"tool", "bdarma"},
                           {"version", kVersion},
                           {"synthetic", true},
                           {"length", a.length},
                           {"seed", a.seed},
                           {"params", bdarma::io::simulation_params_json(sim)}};
    {
        auto out = open_out(a.out + ".meta.json");
        out << meta.dump(2) << '\n';
    }
    say("wrote " + a.out + " (" + std::to_string(a.length) + " months)");
    return kOk;
}

int cmd_diagnose(const Overrides& o) {
    const auto cfg = resolve(o);
    const auto series = load_series(cfg);
    const auto dir = prepare_dir(cfg, "diagnose");
    const bdarma::ModelData data(series, cfg.fourier);
    const auto report = bdarma::baselines::diagnose(data, 2, 12);
    std::vector<std::string> coords;
    for (int k = 0; k < data.n_coords(); ++k) {
        coords.push_back("e" + std::to_string(k + 1) + ":" + series.parts()->label(series.parts()->part_of_coord(k)));
    }
    const std::string text = report.to_text(coords);
    {
        auto out = open_out(dir / "diagnostics.txt");
        out << text;
    }
    nlohmann::json manifest = base_manifest(cfg, series, "diagnose");
    manifest["report"] = report.to_json();
    manifest["coordinates"] = coords;
    {
        auto out = open_out(dir / "diagnostics.json");
        out << manifest.dump(2) << '\n';
    }
    std::cout << text;
    say("wrote " + dir.string());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian Dirichlet ARMA forecasting of monthly compositions"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Overrides bt, fc, dg;
    auto* backtest = app.add_subcommand("backtest", "Expanding-window rolling-origin evaluation");
    add_common(backtest, bt, true);
    add_origins(backtest, bt);
    auto* forecast = app.add_subcommand("forecast", "Fan forecasts from the last observed month");
    add_common(forecast, fc, true);
    auto* diagnose = app.add_subcommand("diagnose", "VAR residual diagnostics (Ljung-Box, Hosking)");
    add_common(diagnose, dg, false);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Draw a synthetic dataset from known parameters");
    simulate->add_option("-p,--params", sim.params, "Parameter JSON")->required();
    simulate->add_option("-T,--length", sim.length, "Months to generate");
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("-o,--out", sim.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*backtest) return cmd_backtest(bt);
        if (*forecast) return cmd_forecast(fc);
        if (*simulate) return cmd_simulate(sim);
        if (*diagnose) return cmd_diagnose(dg);
    } catch (const bdarma::DataError& e) {
        fail(e.what());
        return kData;
    } catch (const bdarma::ProtocolError& e) {
        fail(e.what());
        return kData;
    } catch (const bdarma::InsufficientData& e) {
        fail(e.what());
        return kData;
    } catch (const bdarma::InsufficientHistory& e) {
        fail(e.what());
        return kData;
    } catch (const bdarma::DomainError& e) {
        fail(e.what());
        return kUsage;
    } catch (const std::exception& e) {
        fail(e.what());
        return kPartial;
    }
    return kUsage;
}
