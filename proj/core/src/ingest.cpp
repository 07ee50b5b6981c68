#include "epicast/ingest.hpp"

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace epicast {

namespace {

std::string column_label(std::size_t index, std::string_view name) {
    return "column " + std::to_string(index + 1) + " '" + std::string(name) + "'";
}

bool parse_double(std::string_view text, double &out) {
    const std::string trimmed = csv::trim(text);
    if (trimmed.empty()) {
        return false;
    }
    const char *begin = trimmed.data();
    const char *end = trimmed.data() + trimmed.size();
    if (*begin == '+') {
        ++begin;
    }
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

// Lat/Long: empty -> missing, out of range -> missing, garbage -> error.
std::optional<double> parse_coordinate(std::string_view text, double limit, std::size_t row, std::size_t column) {
    if (csv::trim(text).empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    if (!parse_double(text, value)) {
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(column + 1) +
                            ": coordinate '" + std::string(text) + "' is not numeric",
                        row, column);
    }
    if (value < -limit || value > limit) {
        return std::nullopt;
    }
    return value;
}

double parse_count(std::string_view text, std::size_t row, std::size_t column) {
    double value = 0.0;
    if (!parse_double(text, value) || std::trunc(value) != value) {
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(column + 1) + ": value '" +
                            std::string(text) + "' is not an integer count",
                        row, column);
    }
    if (value < 0.0) {
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(column + 1) +
                            ": negative count " + std::string(text),
                        row, column);
    }
    return value;
}

struct WideLayout {
    std::optional<std::size_t> admin2;
    std::size_t province = 0;
    std::size_t country = 1;
    std::size_t lat = 2;
    std::size_t lon = 3;
    std::size_t first_date = 4;
    Date start;
    std::size_t n_dates = 0;
};

void expect_column(const std::vector<std::string> &header, std::size_t index,
                   std::initializer_list<std::string_view> accepted) {
    if (index >= header.size()) {
        throw FormatError("header is missing " + column_label(index, *accepted.begin()));
    }
    const std::string name = csv::to_lower(csv::trim(header[index]));
    for (auto candidate : accepted) {
        if (name == candidate) {
            return;
        }
    }
    throw FormatError("unexpected header " + column_label(index, header[index]) + ", expected '" +
                      std::string(*accepted.begin()) + "'");
}

WideLayout detect_layout(const std::vector<std::string> &header) {
    WideLayout layout;
    if (!header.empty() && csv::to_lower(csv::trim(header[0])) == "uid") {
        auto find = [&](std::string_view name) -> std::optional<std::size_t> {
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (csv::to_lower(csv::trim(header[i])) == name) {
                    return i;
                }
            }
            return std::nullopt;
        };
        const auto require = [&](std::string_view name) {
            const auto found = find(name);
            if (!found) {
                throw FormatError("US-layout header lacks a '" + std::string(name) + "' column");
            }
            return *found;
        };
        layout.admin2 = require("admin2");
        layout.province = require("province_state");
        layout.country = require("country_region");
        layout.lat = require("lat");
        layout.lon = require("long_");
        layout.first_date = require("combined_key") + 1;
        if (const auto population = find("population")) {
            layout.first_date = std::max(layout.first_date, *population + 1);
        }
    } else {
        expect_column(header, 0, {"province/state", "province_state"});
        expect_column(header, 1, {"country/region", "country_region"});
        expect_column(header, 2, {"lat"});
        expect_column(header, 3, {"long", "long_"});
    }

    layout.n_dates = header.size() > layout.first_date ? header.size() - layout.first_date : 0;
    for (std::size_t i = 0; i < layout.n_dates; ++i) {
        const std::size_t column = layout.first_date + i;
        Date date;
        try {
            date = parse_mdy_date(csv::trim(header[column]));
        } catch (const FormatError &) {
            throw FormatError("header " + column_label(column, header[column]) + " is not an M/D/YY date");
        }
        if (i == 0) {
            layout.start = date;
        } else if (date != add_days(layout.start, static_cast<long long>(i))) {
            throw FormatError("header " + column_label(column, header[column]) +
                              " breaks the run of consecutive days");
        }
    }
    if (layout.n_dates == 0) {
        throw FormatError("header has no date columns after the location columns");
    }
    return layout;
}

RegionSeries parse_row(const csv::Record &record, const WideLayout &layout, std::size_t n_columns, Measure measure) {
    const auto &f = record.fields;
    if (f.size() != n_columns) {
        throw DataError("row " + std::to_string(record.line) + ": expected " + std::to_string(n_columns) +
                            " fields, found " + std::to_string(f.size()),
                        record.line, std::min(f.size(), n_columns));
    }
    RegionSeries series;
    series.measure = measure;
    series.kind = SeriesKind::cumulative;
    series.start = layout.start;

    std::string province = csv::trim(f[layout.province]);
    if (layout.admin2) {
        const std::string admin2 = csv::trim(f[*layout.admin2]);
        if (!admin2.empty()) {
            province = province.empty() ? admin2 : admin2 + ", " + province;
        }
    }
    if (!province.empty()) {
        series.key.province = province;
    }
    series.key.country = csv::trim(f[layout.country]);
    if (series.key.country.empty()) {
        throw DataError("row " + std::to_string(record.line) + ": empty country", record.line, layout.country);
    }
    series.key.latitude = parse_coordinate(f[layout.lat], 90.0, record.line, layout.lat);
    series.key.longitude = parse_coordinate(f[layout.lon], 180.0, record.line, layout.lon);
    // The US files use 0,0 for unassigned rows.
    if (layout.admin2 && series.key.latitude == 0.0 && series.key.longitude == 0.0) {
        series.key.latitude.reset();
        series.key.longitude.reset();
    }

    series.values.reserve(layout.n_dates);
    for (std::size_t i = 0; i < layout.n_dates; ++i) {
        const std::size_t column = layout.first_date + i;
        series.values.push_back(parse_count(f[column], record.line, column));
    }
    return series;
}

} // namespace

std::string_view to_string(Measure measure) {
    switch (measure) {
    case Measure::confirmed:
        return "confirmed";
    case Measure::deaths:
        return "deaths";
    case Measure::recovered:
        return "recovered";
    }
    return "unknown";
}

Measure parse_measure(std::string_view text) {
    const std::string name = csv::to_lower(csv::trim(text));
    if (name == "confirmed" || name == "cases") {
        return Measure::confirmed;
    }
    if (name == "deaths") {
        return Measure::deaths;
    }
    if (name == "recovered") {
        return Measure::recovered;
    }
    throw ContractError("unknown measure '" + std::string(text) + "'");
}

std::string RegionKey::display_name() const {
    if (province && !province->empty()) {
        return *province + ", " + country;
    }
    return country;
}

std::string RegionKey::normalized() const {
    const std::string country_part = csv::to_lower(csv::trim(country));
    const std::string province_part = province ? csv::to_lower(csv::trim(*province)) : std::string();
    return province_part.empty() ? country_part : province_part + ", " + country_part;
}

bool RegionKey::same_region(const RegionKey &other) const {
    const auto norm = [](const std::optional<std::string> &text) {
        return text ? csv::to_lower(csv::trim(*text)) : std::string{};
    };
    return norm(province) == norm(other.province) &&
           csv::to_lower(csv::trim(country)) == csv::to_lower(csv::trim(other.country));
}

std::vector<Date> RegionSeries::dates() const {
    std::vector<Date> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back(date_at(i));
    }
    return out;
}

WideParse parse_wide_csv(std::string_view text, Measure measure, const ParseOptions &options) {
    const auto records = csv::parse(text);
    if (records.empty()) {
        throw FormatError("empty file: no header row");
    }
    const auto &header = records.front().fields;
    const WideLayout layout = detect_layout(header);

    WideParse out;
    out.series.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        try {
            out.series.push_back(parse_row(records[r], layout, header.size(), measure));
        } catch (const DataError &err) {
            if (!options.lenient) {
                throw;
            }
            out.skipped.push_back({err.row(), err.column(), err.what()});
        }
    }
    return out;
}

std::string serialize_wide_csv(const std::vector<RegionSeries> &series) {
    if (series.empty()) {
        throw ContractError("serialize_wide_csv needs at least one series to define the date columns");
    }
    const Date start = series.front().start;
    const std::size_t n = series.front().size();
    std::vector<std::string> header{"Province/State", "Country/Region", "Lat", "Long"};
    for (std::size_t i = 0; i < n; ++i) {
        header.push_back(to_mdy(add_days(start, static_cast<long long>(i))));
    }
    std::string out = csv::join_row(header) + "\n";
    for (const auto &s : series) {
        if (s.start != start || s.size() != n) {
            throw ContractError("serialize_wide_csv: series '" + s.key.display_name() +
                                "' does not share the date columns of the first series");
        }
        std::vector<std::string> row;
        row.reserve(n + 4);
        row.push_back(s.key.province.value_or(""));
        row.push_back(s.key.country);
        row.push_back(s.key.latitude ? csv::format_number(*s.key.latitude) : "");
        row.push_back(s.key.longitude ? csv::format_number(*s.key.longitude) : "");
        for (double v : s.values) {
            row.push_back(csv::format_number(v));
        }
        out += csv::join_row(row) + "\n";
    }
    return out;
}

Counted<RegionSeries> repair_cumulative(const RegionSeries &series) {
    if (series.kind != SeriesKind::cumulative) {
        throw ContractError("repair_cumulative expects a cumulative series");
    }
    Counted<RegionSeries> out{series, 0};
    auto &v = out.value.values;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[i - 1]) {
            v[i] = v[i - 1];
            ++out.changes;
        }
    }
    return out;
}

Counted<RegionSeries> to_daily_counted(const RegionSeries &series) {
    if (series.kind != SeriesKind::cumulative) {
        throw ContractError("to_daily expects a cumulative series");
    }
    Counted<RegionSeries> out{series, 0};
    out.value.kind = SeriesKind::daily;
    auto &v = out.value.values;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double step = series.values[i] - series.values[i - 1];
        if (step < 0.0) {
            ++out.changes;
        }
        v[i] = std::max(0.0, step);
    }
    return out;
}

RegionSeries to_daily(const RegionSeries &series) { return to_daily_counted(series).value; }

RegionSeries to_cumulative(const RegionSeries &daily) {
    if (daily.kind != SeriesKind::daily) {
        throw ContractError("to_cumulative expects a daily series");
    }
    RegionSeries out = daily;
    out.kind = SeriesKind::cumulative;
    for (std::size_t i = 1; i < out.values.size(); ++i) {
        out.values[i] += out.values[i - 1];
    }
    return out;
}

std::pair<RegionSeries, RegionSeries> split_train_test(const RegionSeries &series, std::size_t holdout_days) {
    if (holdout_days >= series.size() && holdout_days > 0) {
        throw ContractError("holdout of " + std::to_string(holdout_days) + " days needs a series longer than " +
                            std::to_string(series.size()));
    }
    const std::size_t n_train = series.size() - holdout_days;
    RegionSeries train = series;
    RegionSeries test = series;
    train.values.assign(series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(n_train), series.values.end());
    test.start = series.date_at(n_train);
    return {std::move(train), std::move(test)};
}

std::vector<WeatherRecord> parse_weather_csv(std::string_view text) {
    const auto records = csv::parse(text);
    if (records.empty()) {
        throw FormatError("weather file is empty");
    }
    const auto &header = records.front().fields;
    expect_column(header, 0, {"region"});
    expect_column(header, 1, {"date"});
    expect_column(header, 2, {"temp_avg_c"});

    std::vector<WeatherRecord> out;
    std::set<std::pair<std::string, long long>> seen;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto &rec = records[r];
        if (rec.fields.size() != header.size()) {
            throw DataError("weather row " + std::to_string(rec.line) + ": wrong field count", rec.line,
                            rec.fields.size());
        }
        WeatherRecord w;
        w.region_name = csv::trim(rec.fields[0]);
        try {
            w.date = parse_iso_date(csv::trim(rec.fields[1]));
        } catch (const FormatError &err) {
            throw DataError("weather row " + std::to_string(rec.line) + ": " + err.what(), rec.line, 1);
        }
        if (!parse_double(rec.fields[2], w.temp_avg) || w.temp_avg < -90.0 || w.temp_avg > 60.0) {
            throw DataError("weather row " + std::to_string(rec.line) + ": temperature '" + rec.fields[2] +
                                "' is not a plausible Celsius value",
                            rec.line, 2);
        }
        if (!seen.emplace(csv::to_lower(w.region_name), days_since_epoch(w.date)).second) {
            throw DataError("weather row " + std::to_string(rec.line) + ": duplicate record for " + w.region_name +
                                " on " + to_iso(w.date),
                            rec.line, 1);
        }
        out.push_back(std::move(w));
    }
    return out;
}

NameMap NameMap::parse(std::string_view text) {
    const auto records = csv::parse(text);
    if (records.empty()) {
        throw FormatError("name-map file is empty");
    }
    expect_column(records.front().fields, 0, {"case_region"});
    expect_column(records.front().fields, 1, {"weather_region"});
    NameMap map;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto &f = records[r].fields;
        if (f.size() != 2) {
            throw DataError("name-map row " + std::to_string(records[r].line) + ": expected 2 fields",
                            records[r].line, f.size());
        }
        map.add(f[0], f[1]);
    }
    return map;
}

void NameMap::add(std::string_view case_region, std::string_view weather_region) {
    entries_[csv::to_lower(csv::trim(case_region))] = {csv::trim(case_region), csv::trim(weather_region)};
}

bool NameMap::contains(const RegionKey &key) const { return entries_.count(key.normalized()) > 0; }

const std::string &NameMap::resolve(const RegionKey &key) const {
    const auto it = entries_.find(key.normalized());
    if (it == entries_.end()) {
        std::string known;
        for (const auto &[norm, entry] : entries_) {
            known += known.empty() ? "" : "; ";
            known += entry.first;
        }
        throw LookupError("no weather region mapped for '" + key.display_name() + "'; known case regions: " +
                          (known.empty() ? std::string("(none)") : known));
    }
    return it->second.second;
}

std::vector<std::string> NameMap::case_regions() const {
    std::vector<std::string> out;
    for (const auto &[norm, entry] : entries_) {
        out.push_back(entry.first);
    }
    return out;
}

WeatherJoin join_weather(const RegionSeries &daily_cases, const std::vector<WeatherRecord> &weather,
                         const NameMap &name_map) {
    if (daily_cases.kind != SeriesKind::daily) {
        throw ContractError("join_weather expects daily new cases");
    }
    if (!daily_cases.key.latitude) {
        throw ContractError("region '" + daily_cases.key.display_name() + "' has no latitude");
    }
    const std::string target = csv::to_lower(name_map.resolve(daily_cases.key));

    std::map<long long, double> temperature_by_day;
    for (const auto &w : weather) {
        if (csv::to_lower(w.region_name) == target) {
            temperature_by_day.emplace(days_since_epoch(w.date), w.temp_avg);
        }
    }

    WeatherJoin out;
    for (std::size_t i = 0; i < daily_cases.size(); ++i) {
        const Date date = daily_cases.date_at(i);
        const auto it = temperature_by_day.find(days_since_epoch(date));
        if (it == temperature_by_day.end()) {
            ++out.dropped;
            continue;
        }
        out.rows.push_back({date, static_cast<long long>(i), it->second, *daily_cases.key.latitude,
                            daily_cases.values[i]});
    }
    return out;
}

const RegionSeries *find_region(const std::vector<RegionSeries> &series, std::string_view display_name) {
    const std::string wanted = csv::to_lower(csv::trim(display_name));
    for (const auto &s : series) {
        if (s.key.normalized() == wanted) {
            return &s;
        }
    }
    return nullptr;
}

} // namespace epicast
