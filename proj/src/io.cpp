#include "bdarma/io.hpp"

#include "bdarma/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bdarma::io {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

CompositionalSeries ingest(std::istream& in, const IngestOptions& options, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source + ": empty file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // UTF-8 BOM
    const std::vector<std::string> header = split_csv(line);
    if (header.size() < 3) throw ParseError(source + ": header needs a date column and at least two components");
    std::vector<std::string> labels(header.begin() + 1, header.end());

    std::size_t reference = labels.size() - 1;
    if (!options.reference.empty()) {
        const auto it = std::find(labels.begin(), labels.end(), options.reference);
        if (it == labels.end()) throw ParseError(source + ": reference part '" + options.reference + "' not in header");
        reference = static_cast<std::size_t>(it - labels.begin());
    }
    PartSetPtr parts;
    try {
        parts = make_parts(labels, reference);
    } catch (const DomainError& e) {
        throw ParseError(source + ": " + e.what());
    }

    std::vector<Eigen::VectorXd> rows;
    std::optional<YearMonth> start, previous;
    std::size_t line_no = 1;
    std::vector<double> raw(labels.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (cells.size() != header.size()) {
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " columns, found " +
                             std::to_string(cells.size()));
        }
        YearMonth month;
        try {
            month = YearMonth::parse(cells[0]);
        } catch (const ParseError& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (previous) {
            if (month <= *previous) throw ParseError(where + ": dates are not strictly increasing");
            if (month != previous->plus_months(1)) {
                throw GapError(where + ": calendar gap, missing " + previous->plus_months(1).to_string());
            }
        } else {
            start = month;
        }
        previous = month;

        for (std::size_t j = 0; j < labels.size(); ++j) {
            const std::string& cell = cells[j + 1];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError(where + ", column '" + labels[j] + "': not a finite number: '" + cell + "'");
            }
            if (v < 0.0) {
                throw ParseError(where + ", column '" + labels[j] + "': negative quantity " + cell);
            }
            if (v == 0.0 && !options.replace_zeros) {
                throw ZeroComponent(where + ", column '" + labels[j] +
                                    "': zero quantity (use the zero-replacement option)");
            }
            raw[j] = v;
        }
        const Composition y = options.replace_zeros
                                  ? closure_with_replacement(parts, raw, options.replacement_eps)
                                  : closure(parts, raw);
        rows.push_back(y.shares());
    }
    if (rows.empty()) throw ParseError(source + ": no data rows");
    Eigen::MatrixXd shares(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(labels.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) shares.row(static_cast<Eigen::Index>(t)) = rows[t].transpose();
    return CompositionalSeries(parts, *start, std::move(shares), 1);
}

CompositionalSeries ingest(const std::filesystem::path& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    return ingest(in, options, path.string());
}

void write_dataset(std::ostream& out, const CompositionalSeries& series) {
    out << "date";
    for (const auto& label : series.parts()->labels()) out << ',' << label;
    out << '\n';
    for (std::size_t t = 0; t < series.size(); ++t) {
        out << series.date(t).to_string();
        for (Eigen::Index j = 0; j < series.shares().cols(); ++j) {
            out << ',' << format_real(series.shares()(static_cast<Eigen::Index>(t), j));
        }
        out << '\n';
    }
}

namespace {

double number_at(const nlohmann::json& node, const std::string& path) {
    if (!node.is_number()) throw SchemaError(path + ": expected a number");
    const double v = node.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path + ": must be finite");
    return v;
}

const nlohmann::json& field(const nlohmann::json& doc, const std::string& key, const std::string& path) {
    if (!doc.contains(key)) throw SchemaError(path + "/" + key + ": required field missing");
    return doc.at(key);
}

Eigen::MatrixXd square_matrix(const nlohmann::json& node, int n, const std::string& path) {
    if (!node.is_array() || static_cast<int>(node.size()) != n) {
        throw SchemaError(path + ": expected " + std::to_string(n) + " rows");
    }
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& row = node[static_cast<std::size_t>(i)];
        const std::string row_path = path + "/" + std::to_string(i);
        if (!row.is_array() || static_cast<int>(row.size()) != n) {
            throw SchemaError(row_path + ": expected " + std::to_string(n) + " columns");
        }
        for (int j = 0; j < n; ++j) m(i, j) = number_at(row[static_cast<std::size_t>(j)], row_path + "/" + std::to_string(j));
    }
    return m;
}

Eigen::VectorXd vector_of(const nlohmann::json& node, int len, const std::string& path) {
    if (!node.is_array() || static_cast<int>(node.size()) != len) {
        throw SchemaError(path + ": expected " + std::to_string(len) + " entries");
    }
    Eigen::VectorXd v(len);
    for (int i = 0; i < len; ++i) v(i) = number_at(node[static_cast<std::size_t>(i)], path + "/" + std::to_string(i));
    return v;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

SimulationParams parse_simulation_params(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("/: expected an object");
    SimulationParams sim;

    const auto& labels_node = field(doc, "labels", "");
    if (!labels_node.is_array() || labels_node.size() < 2) throw SchemaError("/labels: expected at least two labels");
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < labels_node.size(); ++i) {
        if (!labels_node[i].is_string()) throw SchemaError("/labels/" + std::to_string(i) + ": expected a string");
        labels.push_back(labels_node[i].get<std::string>());
    }
    std::size_t reference = labels.size() - 1;
    if (doc.contains("reference")) {
        const auto& ref = doc.at("reference");
        if (!ref.is_string()) throw SchemaError("/reference: expected a label");
        const auto it = std::find(labels.begin(), labels.end(), ref.get<std::string>());
        if (it == labels.end()) throw SchemaError("/reference: not one of the labels");
        reference = static_cast<std::size_t>(it - labels.begin());
    }
    try {
        sim.parts = make_parts(labels, reference);
    } catch (const DomainError& e) {
        throw SchemaError(std::string("/labels: ") + e.what());
    }
    if (doc.contains("start")) {
        if (!doc.at("start").is_string()) throw SchemaError("/start: expected YYYY-MM");
        try {
            sim.start = YearMonth::parse(doc.at("start").get<std::string>());
        } catch (const ParseError& e) {
            throw SchemaError(std::string("/start: ") + e.what());
        }
    }
    if (doc.contains("fourier")) {
        const auto& f = doc.at("fourier");
        if (!f.is_object()) throw SchemaError("/fourier: expected an object");
        const int period = f.contains("period") ? static_cast<int>(number_at(f.at("period"), "/fourier/period")) : 12;
        const int k = f.contains("n_harmonics") ? static_cast<int>(number_at(f.at("n_harmonics"), "/fourier/n_harmonics")) : 5;
        try {
            sim.fourier = FourierSpec(period, k);
        } catch (const DomainError& e) {
            throw SchemaError(std::string("/fourier: ") + e.what());
        }
    }
    const int n = static_cast<int>(labels.size()) - 1;
    const int p = sim.fourier.row_size();
    sim.params = BdarmaParams::zeros(n, sim.fourier);
    sim.params.a1 = square_matrix(field(doc, "A1", ""), n, "/A1");
    sim.params.a2 = square_matrix(field(doc, "A2", ""), n, "/A2");
    const auto& beta = field(doc, "beta", "");
    if (!beta.is_array() || static_cast<int>(beta.size()) != n) {
        throw SchemaError("/beta: expected " + std::to_string(n) + " coordinate blocks");
    }
    for (int j = 0; j < n; ++j) {
        sim.params.beta.segment(j * p, p) = vector_of(beta[static_cast<std::size_t>(j)], p, "/beta/" + std::to_string(j));
    }
    sim.params.gamma = vector_of(field(doc, "gamma", ""), p, "/gamma");
    return sim;
}

nlohmann::json simulation_params_json(const SimulationParams& sim) {
    const int n = sim.params.n_coords();
    const int p = sim.fourier.row_size();
    nlohmann::json beta = nlohmann::json::array();
    for (int j = 0; j < n; ++j) {
        nlohmann::json block = nlohmann::json::array();
        for (int k = 0; k < p; ++k) block.push_back(sim.params.beta(j * p + k));
        beta.push_back(block);
    }
    nlohmann::json gamma = nlohmann::json::array();
    for (Eigen::Index k = 0; k < sim.params.gamma.size(); ++k) gamma.push_back(sim.params.gamma(k));
    return {{"labels", sim.parts->labels()},
            {"reference", sim.parts->label(sim.parts->reference_index())},
            {"start", sim.start.to_string()},
            {"fourier", {{"period", sim.fourier.period}, {"n_harmonics", sim.fourier.n_harmonics}}},
            {"A1", matrix_json(sim.params.a1)},
            {"A2", matrix_json(sim.params.a2)},
            {"beta", beta},
            {"gamma", gamma}};
}

void write_draws_csv(std::ostream& out, const hmc::PosteriorDraws& draws,
                     const std::vector<std::string>& names) {
    if (names.size() != draws.dimension()) throw DomainError("parameter names do not match draws");
    out << "chain_id";
    for (const auto& name : names) out << ",\"" << name << '"';
    out << '\n';
    for (std::size_t i = 0; i < draws.size(); ++i) {
        out << draws.chain_id[i];
        for (Eigen::Index d = 0; d < draws.draws.cols(); ++d) {
            out << ',' << format_real(draws.draws(static_cast<Eigen::Index>(i), d));
        }
        out << '\n';
    }
}

hmc::PosteriorDraws read_draws_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("draws file is empty");
    // Names contain commas inside quotes, so count columns from the first data row.
    std::vector<std::vector<double>> rows;
    std::vector<int> chains;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        chains.push_back(std::stoi(cell));
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged draws file");
        rows.push_back(std::move(row));
    }
    hmc::PosteriorDraws draws;
    draws.chain_id = chains;
    draws.draws.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t d = 0; d < rows[i].size(); ++d) draws.draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
    }
    return draws;
}

void RunConfig::apply_budget_profile() {
    budget = true;
    hmc.n_warmup = 200;
    hmc.n_keep = 200;
    protocol.fan_size = 800;
    const YearMonth last = protocol.first_origin.plus_months(5);
    if (last < protocol.last_origin) protocol.last_origin = last;
}

nlohmann::json RunConfig::to_json() const {
    return {
        {"data", data_path.string()},
        {"reference", reference},
        {"replace_zeros", replace_zeros},
        {"fourier", {{"period", fourier.period}, {"n_harmonics", fourier.n_harmonics}}},
        {"hmc",
         {{"n_chains", hmc.n_chains},
          {"n_warmup", hmc.n_warmup},
          {"n_keep", hmc.n_keep},
          {"target_accept", hmc.target_accept},
          {"max_leapfrog", hmc.max_leapfrog},
          {"seed", hmc.seed}}},
        {"protocol",
         {{"first_origin", protocol.first_origin.to_string()},
          {"last_origin", protocol.last_origin.to_string()},
          {"horizon", protocol.horizon},
          {"fan_size", protocol.fan_size},
          {"models", protocol.models},
          {"seed", protocol.seed},
          {"coverage_level", protocol.coverage_level}}},
        {"output", output_root.string()},
        {"budget", budget},
        {"workers", workers},
        {"warm_start", warm_start},
        {"plots", plots},
        {"dump_fans", dump_fans},
    };
}

namespace {

template <typename T>
T typed(const nlohmann::json& node, const std::string& path) {
    try {
        return node.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError(path + ": wrong type");
    }
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known, const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
        bool found = false;
        for (const char* k : known) found = found || key == k;
        if (!found) throw SchemaError(path + "/" + key + ": unknown field");
    }
}

}  // namespace

void RunConfig::merge_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("/: expected an object");
    reject_unknown(doc, {"data", "reference", "replace_zeros", "fourier", "hmc", "protocol", "output",
                         "budget", "workers", "warm_start", "plots", "dump_fans"}, "");
    if (doc.contains("data")) data_path = typed<std::string>(doc["data"], "/data");
    if (doc.contains("reference")) reference = typed<std::string>(doc["reference"], "/reference");
    if (doc.contains("replace_zeros")) replace_zeros = typed<bool>(doc["replace_zeros"], "/replace_zeros");
    if (doc.contains("fourier")) {
        const auto& f = doc["fourier"];
        if (!f.is_object()) throw SchemaError("/fourier: expected an object");
        reject_unknown(f, {"period", "n_harmonics"}, "/fourier");
        const int period = f.contains("period") ? typed<int>(f["period"], "/fourier/period") : fourier.period;
        const int k = f.contains("n_harmonics") ? typed<int>(f["n_harmonics"], "/fourier/n_harmonics") : fourier.n_harmonics;
        try {
            fourier = FourierSpec(period, k);
        } catch (const DomainError& e) {
            throw SchemaError(std::string("/fourier: ") + e.what());
        }
    }
    if (doc.contains("hmc")) {
        const auto& h = doc["hmc"];
        if (!h.is_object()) throw SchemaError("/hmc: expected an object");
        reject_unknown(h, {"n_chains", "n_warmup", "n_keep", "target_accept", "max_leapfrog", "seed"}, "/hmc");
        if (h.contains("n_chains")) hmc.n_chains = typed<int>(h["n_chains"], "/hmc/n_chains");
        if (h.contains("n_warmup")) hmc.n_warmup = typed<int>(h["n_warmup"], "/hmc/n_warmup");
        if (h.contains("n_keep")) hmc.n_keep = typed<int>(h["n_keep"], "/hmc/n_keep");
        if (h.contains("target_accept")) hmc.target_accept = typed<double>(h["target_accept"], "/hmc/target_accept");
        if (h.contains("max_leapfrog")) hmc.max_leapfrog = typed<int>(h["max_leapfrog"], "/hmc/max_leapfrog");
        if (h.contains("seed")) hmc.seed = typed<std::uint64_t>(h["seed"], "/hmc/seed");
        try {
            hmc.validate();
        } catch (const DomainError& e) {
            throw SchemaError(std::string("/hmc: ") + e.what());
        }
    }
    if (doc.contains("protocol")) {
        const auto& p = doc["protocol"];
        if (!p.is_object()) throw SchemaError("/protocol: expected an object");
        reject_unknown(p, {"first_origin", "last_origin", "horizon", "fan_size", "models", "seed", "coverage_level"}, "/protocol");
        auto month = [&](const char* key) {
            try {
                return YearMonth::parse(typed<std::string>(p[key], std::string("/protocol/") + key));
            } catch (const ParseError& e) {
                throw SchemaError(std::string("/protocol/") + key + ": " + e.what());
            }
        };
        if (p.contains("first_origin")) protocol.first_origin = month("first_origin");
        if (p.contains("last_origin")) protocol.last_origin = month("last_origin");
        if (p.contains("horizon")) protocol.horizon = typed<int>(p["horizon"], "/protocol/horizon");
        if (p.contains("fan_size")) protocol.fan_size = typed<std::size_t>(p["fan_size"], "/protocol/fan_size");
        if (p.contains("models")) protocol.models = typed<std::vector<std::string>>(p["models"], "/protocol/models");
        if (p.contains("seed")) protocol.seed = typed<std::uint64_t>(p["seed"], "/protocol/seed");
        if (p.contains("coverage_level")) protocol.coverage_level = typed<double>(p["coverage_level"], "/protocol/coverage_level");
        if (protocol.horizon < 1) throw SchemaError("/protocol/horizon: must be at least one");
        if (protocol.fan_size < 1) throw SchemaError("/protocol/fan_size: must be at least one");
    }
    if (doc.contains("output")) output_root = typed<std::string>(doc["output"], "/output");
    if (doc.contains("budget")) budget = typed<bool>(doc["budget"], "/budget");
    if (doc.contains("workers")) workers = typed<int>(doc["workers"], "/workers");
    if (doc.contains("warm_start")) warm_start = typed<bool>(doc["warm_start"], "/warm_start");
    if (doc.contains("plots")) plots = typed<bool>(doc["plots"], "/plots");
    if (doc.contains("dump_fans")) dump_fans = typed<bool>(doc["dump_fans"], "/dump_fans");
}

std::string RunConfig::hash() const {
    nlohmann::json canonical = to_json();
    canonical.erase("output");
    canonical.erase("workers");
    const std::string text = canonical.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::filesystem::path RunConfig::run_directory(const std::string& command) const {
    return output_root / (command + "-" + hash());
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    RunConfig config;
    config.merge_json(doc);
    return config;
}

}  // namespace bdarma::io
