#include "bdarma/backtest.hpp"

#include "bdarma/baselines.hpp"
#include "bdarma/errors.hpp"
#include "bdarma/model.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace bdarma::backtest {

namespace {

std::size_t model_rank(const std::string& model) {
    const auto& all = all_models();
    return static_cast<std::size_t>(std::find(all.begin(), all.end(), model) - all.begin());
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<std::string> normalize_models(const std::vector<std::string>& requested) {
    std::vector<std::string> out;
    for (const auto& m : requested) {
        if (model_rank(m) >= all_models().size()) {
            throw DomainError("unknown model '" + m + "' (expected bdarma, tvar2, snaive or alrrw)");
        }
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return model_rank(a) < model_rank(b); });
    if (out.empty()) throw DomainError("no models requested");
    return out;
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& model, const YearMonth& origin) {
    return derive_seed(derive_seed(seed, fnv1a(model)), static_cast<std::uint64_t>(origin.ordinal()));
}

std::vector<std::size_t> enumerate_origins(const ProtocolSpec& spec, const CompositionalSeries& series) {
    if (spec.last_origin < spec.first_origin) throw ProtocolError("last origin precedes first origin");
    if (spec.horizon < 1) throw ProtocolError("horizon must be at least one");
    std::vector<std::size_t> rows;
    for (YearMonth m = spec.first_origin; m <= spec.last_origin; m = m.plus_months(1)) {
        const long row = series.row_of(m);
        if (row < 11) {
            throw ProtocolError("origin " + m.to_string() + " has fewer than twelve months of history");
        }
        if (static_cast<std::size_t>(row) + static_cast<std::size_t>(spec.horizon) >= series.size()) {
            throw ProtocolError("origin " + m.to_string() + " lacks " + std::to_string(spec.horizon) +
                                " months of look-ahead (data end " +
                                series.date(series.size() - 1).to_string() + ")");
        }
        rows.push_back(static_cast<std::size_t>(row));
    }
    return rows;
}

ForecastFan model_fan(const std::string& model, const CompositionalSeries& window, int horizon,
                      std::size_t fan_size, const ModelConfig& config, std::uint64_t seed,
                      nlohmann::json* diagnostics, const hmc::ChainDiagnostics* warm,
                      hmc::ChainDiagnostics* adapted) {
    if (model == "snaive") {
        return baselines::snaive_fan(window, window.size() - 1, horizon, fan_size);
    }
    const ModelData data(window, config.fourier);
    if (model == "alrrw") return baselines::alr_rw_fan(data, horizon, fan_size);
    Rng rng(derive_seed(seed, 1));
    if (model == "tvar2") {
        const auto fit = baselines::fit_tvar2(data);
        return baselines::tvar2_fan(fit, data, horizon, fan_size, rng);
    }
    if (model == "bdarma") {
        hmc::HmcConfig hmc = config.hmc;
        hmc.seed = derive_seed(seed, 2);
        if (warm && !warm->step_size.empty()) {
            hmc.step_size = warm->step_size.front();
            hmc.initial_inverse_mass = warm->inverse_mass.front();
        }
        const BdarmaFit fit = fit_bdarma(data, hmc);
        if (diagnostics) {
            *diagnostics = fit.posterior.diagnostics.summary();
            (*diagnostics)["precision_clamp_events"] = fit.clamp_events;
        }
        if (adapted) *adapted = fit.posterior.diagnostics;
        return forecast_fan(fit.posterior, data, horizon, fan_size, rng);
    }
    throw DomainError("unknown model '" + model + "'");
}

RollingResult run_rolling(const ProtocolSpec& spec, const CompositionalSeries& series,
                          const ModelConfig& config, const FanSink& sink) {
    const std::vector<std::size_t> origin_rows = enumerate_origins(spec, series);
    const std::vector<std::string> models = normalize_models(spec.models);

    struct OriginOutput {
        std::vector<scoring::ScoreRecord> records;
        std::vector<CellError> errors;
        OriginArtifact artifact;
    };
    std::vector<OriginOutput> outputs(origin_rows.size());
    std::mutex sink_mutex;
    hmc::ChainDiagnostics warm_state;
    bool have_warm = false;

    auto process = [&](std::size_t s) {
        const auto started = std::chrono::steady_clock::now();
        const std::size_t row = origin_rows[s];
        const YearMonth origin = series.date(row);
        // Estimation window: rows 0..row only.
        const CompositionalSeries window = series.prefix(row + 1);
        OriginOutput& out = outputs[s];
        out.artifact.origin = origin;
        out.artifact.window_rows = window.size();
        out.artifact.window_hash = window.content_hash(window.size());

        for (const auto& model : models) {
            try {
                nlohmann::json diag;
                hmc::ChainDiagnostics adapted;
                const bool use_warm = config.warm_start && have_warm && model == "bdarma";
                const ForecastFan fan =
                    model_fan(model, window, spec.horizon, spec.fan_size, config,
                              cell_seed(spec.seed, model, origin), &diag,
                              use_warm ? &warm_state : nullptr, &adapted);
                if (config.warm_start && model == "bdarma") {
                    warm_state = adapted;
                    have_warm = true;
                }
                if (!diag.is_null()) out.artifact.diagnostics[model] = diag;
                if (fan.size() != static_cast<std::size_t>(spec.horizon)) {
                    throw NumericalError("model produced the wrong number of horizons");
                }
                std::vector<scoring::ScoreRecord> cell;
                for (int h = 1; h <= spec.horizon; ++h) {
                    const Fan& f = fan[static_cast<std::size_t>(h - 1)];
                    if (f.size() != spec.fan_size) throw NumericalError("fan cardinality differs from M");
                    const Composition truth = series.at(row + static_cast<std::size_t>(h));
                    scoring::ScoreRecord rec;
                    rec.model = model;
                    rec.origin = origin;
                    rec.horizon = h;
                    rec.crps = scoring::crps_sample(f, truth);
                    rec.rmse = scoring::aitchison_rmse(f, truth);
                    rec.covered = scoring::interval_coverage(f, truth, spec.coverage_level);
                    cell.push_back(std::move(rec));
                }
                for (auto& rec : cell) out.records.push_back(std::move(rec));
                if (sink) {
                    std::lock_guard lock(sink_mutex);
                    sink(origin, model, fan);
                }
            } catch (const std::exception& e) {
                out.errors.push_back({origin, model, e.what()});
            }
        }
        out.artifact.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    const std::size_t workers = config.warm_start ? 1 : static_cast<std::size_t>(std::max(1, config.workers));
    if (workers <= 1 || origin_rows.size() <= 1) {
        for (std::size_t s = 0; s < origin_rows.size(); ++s) process(s);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, origin_rows.size()); ++w) {
            pool.emplace_back([&] {
                for (std::size_t s = next++; s < origin_rows.size(); s = next++) process(s);
            });
        }
        for (auto& t : pool) t.join();
    }

    RollingResult result;
    for (auto& out : outputs) {
        for (auto& r : out.records) result.records.push_back(std::move(r));
        for (auto& e : out.errors) result.errors.push_back(std::move(e));
        result.origins.push_back(std::move(out.artifact));
    }
    std::stable_sort(result.records.begin(), result.records.end(), [](const auto& a, const auto& b) {
        if (a.origin != b.origin) return a.origin < b.origin;
        if (a.model != b.model) return model_rank(a.model) < model_rank(b.model);
        return a.horizon < b.horizon;
    });
    return result;
}

FixedOriginResult run_fixed_origin(const CompositionalSeries& series, int horizon,
                                   std::size_t fan_size, const std::vector<std::string>& models,
                                   const ModelConfig& config, std::uint64_t seed) {
    if (series.size() < 12) throw InsufficientData("fixed-origin forecast needs twelve months");
    FixedOriginResult result;
    const YearMonth origin = series.date(series.size() - 1);
    const PartSetPtr& parts = series.parts();
    for (const auto& model : normalize_models(models)) {
        try {
            nlohmann::json diag;
            ForecastFan fan = model_fan(model, series, horizon, fan_size, config,
                                        cell_seed(seed, model, origin), &diag);
            if (!diag.is_null()) result.diagnostics[model] = diag;
            for (int h = 1; h <= horizon; ++h) {
                const Fan& f = fan[static_cast<std::size_t>(h - 1)];
                for (std::size_t j = 0; j < parts->size(); ++j) {
                    std::vector<double> column(f.size());
                    for (std::size_t m = 0; m < f.size(); ++m) {
                        column[m] = f.draws(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j));
                    }
                    std::sort(column.begin(), column.end());
                    QuantileRow q;
                    q.model = model;
                    q.horizon = h;
                    q.date = origin.plus_months(h);
                    q.component = parts->label(j);
                    q.q05 = scoring::quantile_type7(column, 0.05);
                    q.q50 = scoring::quantile_type7(column, 0.50);
                    q.q95 = scoring::quantile_type7(column, 0.95);
                    result.quantiles.push_back(std::move(q));
                }
            }
            result.models.push_back(model);
            result.fans.push_back(std::move(fan));
        } catch (const std::exception& e) {
            result.errors.push_back({origin, model, e.what()});
        }
    }
    return result;
}

void write_quantiles_csv(std::ostream& out, const std::vector<QuantileRow>& rows) {
    out << "model,h,date,component,q05,q50,q95\n";
    for (const auto& r : rows) {
        out << r.model << ',' << r.horizon << ',' << r.date.to_string() << ',' << r.component << ','
            << format_real(r.q05) << ',' << format_real(r.q50) << ',' << format_real(r.q95) << '\n';
    }
}

std::vector<QuantileRow> read_quantiles_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "model,h,date,component,q05,q50,q95") {
        throw ParseError("unexpected quantile header");
    }
    std::vector<QuantileRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw ParseError("line " + std::to_string(line_no) + ": expected 7 columns");
        rows.push_back({cells[0], std::stoi(cells[1]), YearMonth::parse(cells[2]), cells[3],
                        std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6])});
    }
    return rows;
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(sizeof(T) == 8);
    auto bits = std::bit_cast<std::uint64_t>(value);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ParseError("truncated fan file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

void write_fan_binary(const std::filesystem::path& path, const ForecastFan& fan) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    const std::uint64_t m = fan.empty() ? 0 : fan.front().size();
    const std::uint64_t j = fan.empty() ? 0 : fan.front().n_parts();
    write_le(out, m);
    write_le(out, static_cast<std::uint64_t>(fan.size()));
    write_le(out, j);
    for (const auto& f : fan) {
        for (Eigen::Index r = 0; r < f.draws.rows(); ++r) {
            for (Eigen::Index c = 0; c < f.draws.cols(); ++c) write_le(out, f.draws(r, c));
        }
    }
}

ForecastFan read_fan_binary(const std::filesystem::path& path, const PartSetPtr& parts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    const auto m = read_le<std::uint64_t>(in);
    const auto h = read_le<std::uint64_t>(in);
    const auto j = read_le<std::uint64_t>(in);
    if (j != parts->size()) throw ParseError("fan file has " + std::to_string(j) + " components");
    ForecastFan fan;
    for (std::uint64_t k = 0; k < h; ++k) {
        Fan f{parts, Eigen::MatrixXd(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j))};
        for (Eigen::Index r = 0; r < f.draws.rows(); ++r) {
            for (Eigen::Index c = 0; c < f.draws.cols(); ++c) f.draws(r, c) = read_le<double>(in);
        }
        fan.push_back(std::move(f));
    }
    return fan;
}

}  // namespace bdarma::backtest
