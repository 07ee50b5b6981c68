#include "synthetic.hpp"

#include "epicast/csv.hpp"
#include "epicast/runner.hpp"

#include <cmath>
#include <numbers>

namespace epicast::synth {

std::vector<double> simulate_arma11(Rng &rng, std::size_t n, double phi, double theta, double sigma,
                                    std::size_t burn) {
    std::vector<double> out;
    out.reserve(n);
    double y = 0.0;
    double e_prev = 0.0;
    for (std::size_t t = 0; t < n + burn; ++t) {
        const double e = sigma * rng.normal();
        y = phi * y + e + theta * e_prev;
        e_prev = e;
        if (t >= burn) {
            out.push_back(y);
        }
    }
    return out;
}

std::vector<double> epidemic_curve(Rng &rng, std::size_t n_days, const CurveShape &shape) {
    std::vector<double> cumulative;
    cumulative.reserve(n_days);
    double total = 0.0;
    for (std::size_t i = 0; i < n_days; ++i) {
        const double x = (static_cast<double>(i) - shape.midpoint) / shape.width;
        const double logistic = 1.0 / (1.0 + std::exp(-x));
        double daily = shape.onset + shape.peak_daily * logistic;
        daily *= 1.0 + shape.weekly_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 7.0);
        daily *= std::max(0.0, 1.0 + shape.noise * rng.normal());
        total += std::round(daily);
        cumulative.push_back(total);
    }
    return cumulative;
}

Date day0() { return Date{std::chrono::year{2020} / std::chrono::January / 22}; }

std::vector<RegionSeries> synthetic_regions(std::size_t n_regions, std::size_t n_days, std::uint64_t seed,
                                            Measure measure) {
    Rng rng(seed);
    std::vector<RegionSeries> out;
    for (std::size_t r = 0; r < n_regions; ++r) {
        RegionSeries s;
        s.key.country = "Country" + std::to_string(r);
        if (r % 3 == 1) {
            s.key.province = "Province" + std::to_string(r);
        }
        s.key.latitude = -50.0 + 100.0 * rng.uniform();
        s.key.longitude = -170.0 + 340.0 * rng.uniform();
        s.measure = measure;
        s.start = day0();
        CurveShape shape;
        shape.peak_daily = (measure == Measure::deaths ? 5.0 : 100.0) * (1.0 + 9.0 * rng.uniform());
        shape.midpoint = 0.4 * static_cast<double>(n_days) + 0.4 * static_cast<double>(n_days) * rng.uniform();
        shape.width = 5.0 + 10.0 * rng.uniform();
        s.values = epidemic_curve(rng, n_days, shape);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<WeatherRecord> synthetic_weather(const std::vector<RegionSeries> &series, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<WeatherRecord> out;
    for (const auto &s : series) {
        const double base = 25.0 - 0.3 * std::abs(s.key.latitude.value_or(0.0));
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double seasonal = 6.0 * std::sin(static_cast<double>(i) / 40.0);
            out.push_back({"station-" + s.key.display_name(), s.date_at(i), base + seasonal + 2.0 * rng.normal()});
        }
    }
    return out;
}

std::string synthetic_name_map(const std::vector<RegionSeries> &series) {
    std::string out = "case_region,weather_region\n";
    for (const auto &s : series) {
        out += csv::join_row({s.key.display_name(), "station-" + s.key.display_name()}) + "\n";
    }
    return out;
}

std::string weather_csv(const std::vector<WeatherRecord> &records) {
    std::string out = "region,date,temp_avg_c\n";
    for (const auto &r : records) {
        out += csv::join_row({r.region_name, to_iso(r.date), csv::format_number(std::round(r.temp_avg * 100) / 100)});
        out += "\n";
    }
    return out;
}

std::string synthetic_us_csv(const std::vector<std::pair<std::string, std::string>> &counties,
                             const std::vector<std::vector<double>> &cumulative, Date start) {
    std::vector<std::string> header{"UID", "iso2", "iso3", "code3", "FIPS", "Admin2", "Province_State",
                                    "Country_Region", "Lat", "Long_", "Combined_Key"};
    for (std::size_t i = 0; i < cumulative.front().size(); ++i) {
        header.push_back(to_mdy(add_days(start, static_cast<long long>(i))));
    }
    std::string out = csv::join_row(header) + "\n";
    for (std::size_t c = 0; c < counties.size(); ++c) {
        const auto &[admin2, state] = counties[c];
        std::vector<std::string> row{std::to_string(84000000 + c), "US", "USA", "840", std::to_string(6000 + c),
                                     admin2, state, "US", csv::format_number(34.0 + c), csv::format_number(-118.0 + c),
                                     admin2 + ", " + state + ", US"};
        for (double v : cumulative[c]) {
            row.push_back(csv::format_number(v));
        }
        out += csv::join_row(row) + "\n";
    }
    return out;
}

Workspace make_workspace(const std::filesystem::path &dir, std::size_t n_regions, std::size_t n_days,
                         std::uint64_t seed) {
    Workspace ws;
    ws.dir = dir;
    std::filesystem::create_directories(dir);
    ws.confirmed = synthetic_regions(n_regions, n_days, seed);
    auto deaths = synthetic_regions(n_regions, n_days, seed + 1, Measure::deaths);
    for (std::size_t r = 0; r < n_regions; ++r) {
        deaths[r].key = ws.confirmed[r].key;
        for (auto &v : deaths[r].values) {
            v = std::floor(v * 0.03);
        }
    }
    ws.cases = dir / "cases.csv";
    ws.deaths = dir / "deaths.csv";
    ws.weather = dir / "weather.csv";
    ws.name_map = dir / "name_map.csv";
    write_file(ws.cases, serialize_wide_csv(ws.confirmed));
    write_file(ws.deaths, serialize_wide_csv(deaths));
    write_file(ws.weather, weather_csv(synthetic_weather(ws.confirmed, seed + 2)));
    write_file(ws.name_map, synthetic_name_map(ws.confirmed));
    return ws;
}

std::filesystem::path scratch_dir(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / ("epicast_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace epicast::synth
