#include "bdarma/plot.hpp"

#include "bdarma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace bdarma::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 120.0;
constexpr double kTop = 28.0;
constexpr double kBottom = 40.0;

const char* color_for(const std::string& model) {
    if (model == "bdarma") return "#1f77b4";
    if (model == "tvar2") return "#d62728";
    if (model == "snaive") return "#2ca02c";
    if (model == "alrrw") return "#9467bd";
    return "#7f7f7f";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string fan_chart_svg(const CompositionalSeries& history, std::size_t component,
                          const std::vector<backtest::QuantileRow>& rows, int history_months,
                          const std::string& band_model) {
    if (component >= history.n_parts()) throw OutOfRange("component index out of range");
    const std::string& label = history.parts()->label(component);

    std::vector<backtest::QuantileRow> mine;
    for (const auto& r : rows) {
        if (r.component == label) mine.push_back(r);
    }
    std::sort(mine.begin(), mine.end(), [](const auto& a, const auto& b) {
        return a.model != b.model ? a.model < b.model : a.horizon < b.horizon;
    });

    const std::size_t t_len = history.size();
    const std::size_t first = t_len > static_cast<std::size_t>(history_months) ? t_len - history_months : 0;

    double x_min = history.date(first).ordinal();
    double x_max = history.date(t_len - 1).ordinal();
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -y_min;
    for (std::size_t t = first; t < t_len; ++t) {
        const double v = history.shares()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(component));
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    }
    for (const auto& r : mine) {
        x_max = std::max(x_max, static_cast<double>(r.date.ordinal()));
        y_min = std::min({y_min, r.q05, r.q50});
        y_max = std::max({y_max, r.q95, r.q50});
    }
    const double pad = std::max((y_max - y_min) * 0.08, 1e-6);
    y_min -= pad;
    y_max += pad;
    if (x_max <= x_min) x_max = x_min + 1.0;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
    auto sy = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kLeft << "\" y=\"18\" font-size=\"14\">" << escape(label) << "</text>\n";

    // axes and ticks
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y_min + (y_max - y_min) * i / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", y);
        svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(sy(y)) << "\" x2=\"" << kLeft << "\" y2=\""
            << num(sy(y)) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(sy(y) + 4) << "\" text-anchor=\"end\">" << buf
            << "</text>\n";
    }
    for (int o = static_cast<int>(std::ceil(x_min)); o <= static_cast<int>(x_max); ++o) {
        const YearMonth ym = YearMonth::from_ordinal(o);
        if (ym.month != 1 && ym.month != 7) continue;
        svg << "<line x1=\"" << num(sx(o)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(sx(o)) << "\" y2=\""
            << kTop + ph + 4 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << num(sx(o)) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
            << ym.to_string() << "</text>\n";
    }

    // band
    std::vector<const backtest::QuantileRow*> band;
    for (const auto& r : mine) {
        if (r.model == band_model) band.push_back(&r);
    }
    if (!band.empty()) {
        svg << "<polygon fill=\"" << color_for(band_model) << "\" fill-opacity=\"0.2\" stroke=\""
            << color_for(band_model) << "\" stroke-opacity=\"0.4\" points=\"";
        for (const auto* r : band) svg << num(sx(r->date.ordinal())) << ',' << num(sy(r->q95)) << ' ';
        for (auto it = band.rbegin(); it != band.rend(); ++it) {
            svg << num(sx((*it)->date.ordinal())) << ',' << num(sy((*it)->q05)) << ' ';
        }
        svg << "\"/>\n";
    }

    // history
    svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = first; t < t_len; ++t) {
        svg << num(sx(history.date(t).ordinal())) << ','
            << num(sy(history.shares()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(component)))) << ' ';
    }
    svg << "\"/>\n";

    // medians, anchored at the last observation
    std::map<std::string, std::vector<const backtest::QuantileRow*>> by_model;
    for (const auto& r : mine) by_model[r.model].push_back(&r);
    const double last_x = history.date(t_len - 1).ordinal();
    const double last_y = history.shares()(static_cast<Eigen::Index>(t_len - 1), static_cast<Eigen::Index>(component));
    double legend_y = kTop + 8;
    for (const auto& [model, list] : by_model) {
        svg << "<polyline fill=\"none\" stroke=\"" << color_for(model) << "\" stroke-width=\"1.5\" points=\""
            << num(sx(last_x)) << ',' << num(sy(last_y)) << ' ';
        for (const auto* r : list) svg << num(sx(r->date.ordinal())) << ',' << num(sy(r->q50)) << ' ';
        svg << "\"/>\n";
        svg << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << legend_y << "\" x2=\"" << kLeft + pw + 30
            << "\" y2=\"" << legend_y << "\" stroke=\"" << color_for(model) << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + pw + 34 << "\" y=\"" << legend_y + 4 << "\">" << escape(model) << "</text>\n";
        legend_y += 16;
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::filesystem::path> write_fan_charts(const std::filesystem::path& dir,
                                                    const CompositionalSeries& history,
                                                    const std::vector<backtest::QuantileRow>& rows,
                                                    int history_months) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (std::size_t j = 0; j < history.n_parts(); ++j) {
        const std::filesystem::path path = dir / ("fan_" + history.parts()->label(j) + ".svg");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        out << fan_chart_svg(history, j, rows, history_months);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace bdarma::plot
