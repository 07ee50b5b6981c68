#pragma once

#include "epicast/date.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace epicast {

enum class Measure { confirmed, deaths, recovered };
enum class SeriesKind { cumulative, daily };

std::string_view to_string(Measure measure);
Measure parse_measure(std::string_view text);

/// Location of one row in the upstream tables. Coordinates outside their
/// physical range are stored as missing.
struct RegionKey {
    std::optional<std::string> province;
    std::string country;
    std::optional<double> latitude;
    std::optional<double> longitude;

    /// "province, country" or just "country".
    std::string display_name() const;

    /// Case-insensitive on the trimmed text fields; coordinates are ignored.
    bool same_region(const RegionKey &other) const;
    bool operator==(const RegionKey &other) const { return same_region(other); }

    /// Trimmed, lower-cased display name; the basis for hashing and ordering.
    std::string normalized() const;
};

/// Dated, gap-free daily sequence for one region and one measure.
struct RegionSeries {
    RegionKey key;
    Measure measure = Measure::confirmed;
    Date start;
    std::vector<double> values;
    SeriesKind kind = SeriesKind::cumulative;

    std::size_t size() const { return values.size(); }
    Date date_at(std::size_t i) const { return add_days(start, static_cast<long long>(i)); }
    Date end_date() const { return date_at(values.empty() ? 0 : values.size() - 1); }
    std::vector<Date> dates() const;
};

struct WeatherRecord {
    std::string region_name;
    Date date;
    double temp_avg = 0.0; // degrees Celsius
};

struct JoinedRow {
    Date date;
    long long day_index = 0;
    double temperature = 0.0;
    double latitude = 0.0;
    double new_cases = 0.0;
};

struct RowIssue {
    std::size_t row = 0;    // 1-based line in the file
    std::size_t column = 0; // 0-based
    std::string message;
};

struct ParseOptions {
    bool lenient = false; // skip malformed rows instead of aborting
};

struct WideParse {
    std::vector<RegionSeries> series;
    std::vector<RowIssue> skipped;
};

/// Reads an upstream wide table: `Province/State,Country/Region,Lat,Long`
/// followed by consecutive `M/D/YY` date columns. The per-county US layout
/// (`UID,...,Admin2,Province_State,Country_Region,Lat,Long_,Combined_Key[,Population]`)
/// is accepted too; its Admin2 and state are folded into the province.
WideParse parse_wide_csv(std::string_view text, Measure measure, const ParseOptions &options = {});

/// Writes the global wide layout. All series must share start date and length.
std::string serialize_wide_csv(const std::vector<RegionSeries> &series);

template <typename T>
struct Counted {
    T value;
    std::size_t changes = 0;
};

/// Running-max repair of a cumulative series; `changes` counts replaced values.
Counted<RegionSeries> repair_cumulative(const RegionSeries &series);

/// Daily increments with negative steps clamped to 0; `changes` counts clamps.
Counted<RegionSeries> to_daily_counted(const RegionSeries &series);
RegionSeries to_daily(const RegionSeries &series);

/// Inverse of to_daily when nothing was clamped.
RegionSeries to_cumulative(const RegionSeries &daily);

std::pair<RegionSeries, RegionSeries> split_train_test(const RegionSeries &series, std::size_t holdout_days);

/// Weather table with header `region,date,temp_avg_c`.
std::vector<WeatherRecord> parse_weather_csv(std::string_view text);

/// Explicit case-region -> weather-region mapping read from `case_region,weather_region`.
class NameMap {
public:
    NameMap() = default;

    static NameMap parse(std::string_view text);

    void add(std::string_view case_region, std::string_view weather_region);

    /// Throws LookupError listing the known case regions when absent.
    const std::string &resolve(const RegionKey &key) const;
    bool contains(const RegionKey &key) const;
    std::vector<std::string> case_regions() const;

private:
    std::map<std::string, std::pair<std::string, std::string>> entries_; // normalized -> (original, weather)
};

struct WeatherJoin {
    std::vector<JoinedRow> rows;
    std::size_t dropped = 0; // case dates without a weather record
};

/// Inner join on date. The case series must be daily and carry a latitude.
WeatherJoin join_weather(const RegionSeries &daily_cases, const std::vector<WeatherRecord> &weather,
                         const NameMap &name_map);

/// Finds a series by display name (case-insensitive). Returns nullptr when absent.
const RegionSeries *find_region(const std::vector<RegionSeries> &series, std::string_view display_name);

} // namespace epicast
