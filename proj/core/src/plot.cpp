#include "epicast/plot.hpp"

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace epicast::plot {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        case '\'':
            out += "&apos;";
            break;
        default:
            // Control characters are not allowed in XML 1.0.
            if (static_cast<unsigned char>(c) >= 0x20 || c == '\t' || c == '\n') {
                out.push_back(c);
            }
        }
    }
    return out;
}

std::string fmt2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Frame {
    long long day_min = 0;
    long long day_max = 1;
    double y_min = 0.0;
    double y_max = 1.0;

    double x(long long day) const {
        return kMargin + (kWidth - 2 * kMargin) * static_cast<double>(day - day_min) /
                             static_cast<double>(std::max(1LL, day_max - day_min));
    }
    double y(double v) const {
        const double span = y_max > y_min ? y_max - y_min : 1.0;
        return kHeight - kMargin - (kHeight - 2 * kMargin) * (v - y_min) / span;
    }
};

Frame make_frame(const RegionSeries &actual, const ForecastResult &forecast) {
    Frame f;
    f.day_min = std::numeric_limits<long long>::max();
    f.day_max = std::numeric_limits<long long>::min();
    f.y_min = std::numeric_limits<double>::infinity();
    f.y_max = -std::numeric_limits<double>::infinity();
    const auto see = [&f](long long day, double lo, double hi) {
        f.day_min = std::min(f.day_min, day);
        f.day_max = std::max(f.day_max, day);
        if (std::isfinite(lo)) {
            f.y_min = std::min(f.y_min, lo);
        }
        if (std::isfinite(hi)) {
            f.y_max = std::max(f.y_max, hi);
        }
    };
    for (std::size_t i = 0; i < actual.size(); ++i) {
        see(days_since_epoch(actual.date_at(i)), actual.values[i], actual.values[i]);
    }
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        see(days_since_epoch(forecast.horizon_dates[i]), forecast.lower95[i], forecast.upper95[i]);
    }
    if (f.day_min > f.day_max) {
        f.day_min = 0;
        f.day_max = 1;
    }
    if (!(f.y_min <= f.y_max)) {
        f.y_min = 0.0;
        f.y_max = 1.0;
    }
    return f;
}

std::string band(const Frame &f, const ForecastResult &fc, const std::vector<double> &lo, const std::vector<double> &hi,
                 const char *fill, const char *name) {
    std::string pts;
    for (std::size_t i = 0; i < fc.size(); ++i) {
        pts += fmt2(f.x(days_since_epoch(fc.horizon_dates[i]))) + "," + fmt2(f.y(hi[i])) + " ";
    }
    for (std::size_t i = fc.size(); i-- > 0;) {
        pts += fmt2(f.x(days_since_epoch(fc.horizon_dates[i]))) + "," + fmt2(f.y(lo[i])) + " ";
    }
    return "  <polygon class=\"" + std::string(name) + "\" fill=\"" + std::string(fill) +
           "\" stroke=\"none\" points=\"" + pts + "\"/>\n";
}

} // namespace

std::string render_svg(const RegionSeries &actual, const ForecastResult &forecast, const std::string &title) {
    const Frame f = make_frame(actual, forecast);
    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(kWidth) + "\" height=\"" + fmt2(kHeight) +
           "\" viewBox=\"0 0 " + fmt2(kWidth) + " " + fmt2(kHeight) + "\">\n";
    svg += "  <rect x=\"0\" y=\"0\" width=\"" + fmt2(kWidth) + "\" height=\"" + fmt2(kHeight) + "\" fill=\"white\"/>\n";
    svg += "  <title>" + xml_escape(title) + "</title>\n";
    svg += "  <text x=\"" + fmt2(kMargin) + "\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">" +
           xml_escape(title) + "</text>\n";
    svg += "  <line x1=\"" + fmt2(kMargin) + "\" y1=\"" + fmt2(kHeight - kMargin) + "\" x2=\"" +
           fmt2(kWidth - kMargin) + "\" y2=\"" + fmt2(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"" + fmt2(kMargin) + "\" y1=\"" + fmt2(kMargin) + "\" x2=\"" + fmt2(kMargin) + "\" y2=\"" +
           fmt2(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
    svg += "  <text x=\"5\" y=\"" + fmt2(kMargin) + "\" font-size=\"10\">" + xml_escape(csv::format_number(f.y_max)) +
           "</text>\n";
    svg += "  <text x=\"5\" y=\"" + fmt2(kHeight - kMargin) + "\" font-size=\"10\">" +
           xml_escape(csv::format_number(f.y_min)) + "</text>\n";

    if (forecast.size() > 0) {
        svg += band(f, forecast, forecast.lower95, forecast.upper95, "#c6dbef", "band95");
        svg += band(f, forecast, forecast.lower80, forecast.upper80, "#9ecae1", "band80");
    }
    if (actual.size() > 0) {
        std::string pts;
        for (std::size_t i = 0; i < actual.size(); ++i) {
            pts += fmt2(f.x(days_since_epoch(actual.date_at(i)))) + "," + fmt2(f.y(actual.values[i])) + " ";
        }
        svg += "  <polyline class=\"actual\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
    }
    const double legend_x = kWidth - kMargin - 80.0;
    svg += "  <text x=\"" + fmt2(legend_x) + "\" y=\"25\" font-size=\"11\" fill=\"black\">actual</text>\n";
    if (forecast.size() > 0) {
        std::string pts;
        for (std::size_t i = 0; i < forecast.size(); ++i) {
            pts += fmt2(f.x(days_since_epoch(forecast.horizon_dates[i]))) + "," + fmt2(f.y(forecast.point[i])) + " ";
        }
        svg += "  <polyline class=\"forecast\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"" +
               pts + "\"/>\n";
        svg += "  <text x=\"" + fmt2(legend_x) + "\" y=\"40\" font-size=\"11\" fill=\"#08519c\">forecast</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_csv(const RegionSeries &actual, const ForecastResult &forecast) {
    std::string out = "date,kind,value,lo80,hi80,lo95,hi95\n";
    for (std::size_t i = 0; i < actual.size(); ++i) {
        out += to_iso(actual.date_at(i)) + ",actual," + csv::format_number(actual.values[i]) + ",,,,\n";
    }
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        out += csv::join_row({to_iso(forecast.horizon_dates[i]), "forecast", csv::format_number(forecast.point[i]),
                              csv::format_number(forecast.lower80[i]), csv::format_number(forecast.upper80[i]),
                              csv::format_number(forecast.lower95[i]), csv::format_number(forecast.upper95[i])});
        out += "\n";
    }
    return out;
}

void emit_plot(const RegionSeries &actual, const ForecastResult &forecast, const std::filesystem::path &svg_path,
               const std::string &title) {
    const auto write = [](const std::filesystem::path &path, const std::string &content) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        out << content;
        if (!out) {
            throw IoError("write failed for " + path.string());
        }
    };
    write(svg_path, render_svg(actual, forecast, title));
    auto csv_path = svg_path;
    csv_path.replace_extension(".csv");
    write(csv_path, render_csv(actual, forecast));
}

} // namespace epicast::plot
