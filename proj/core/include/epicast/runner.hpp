#pragma once

#include "epicast/classifier.hpp"
#include "epicast/config.hpp"
#include "epicast/ingest.hpp"
#include "epicast/series.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace epicast {

/// Runs fn(0..n-1) on up to `jobs` threads. Each index runs exactly once.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)> &fn);

/// FNV-1a over the normalized display name.
std::uint64_t region_hash(const RegionKey &key);
std::uint64_t region_seed(std::uint64_t global_seed, const RegionKey &key);

/// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, const std::string &content);

struct ReportRow {
    std::string region;
    Measure measure = Measure::confirmed;
    ModelKind model = ModelKind::arima;
    bool ok = false;
    EvalReport eval;
    std::string selected; // chosen order/spec
    std::string error;
    double wall_ms = 0.0;
    std::uint64_t seed = 0;
    ForecastResult forecast;
};

struct RunReport {
    std::vector<ReportRow> rows;
    std::vector<std::string> warnings;

    /// `model,region,measure,rmse,me,mae,n,selected,error`; no timings, so it is reproducible.
    std::string to_csv() const;
    std::string to_json() const;
    std::string timings_csv() const;
    bool all_failed() const;
};

/// Cumulative series per measure after running-max repair.
struct RunInputs {
    std::vector<RegionSeries> series;
    std::size_t repairs = 0;
    std::vector<RowIssue> skipped;
};

RunInputs load_inputs(const RunConfig &config);

/// Forecast every (region, measure, model) combination; failures become error rows.
RunReport run_forecasts(const std::vector<RegionSeries> &series, const RunConfig &config);

/// report.csv, report.json, timings.csv, forecasts/ and plots/ under config.output.
void write_outputs(const RunReport &report, const std::vector<RegionSeries> &series, const RunConfig &config);

/// load_inputs + run_forecasts + write_outputs.
RunReport run(const RunConfig &config);

struct ClassifierRow {
    std::string model;    // "logistic", "random_forest", "logistic[temperature]", ...
    double auc = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;
};

struct ClassifyReport {
    std::vector<ClassifierRow> rows;
    double positive_rate = 0.0;
    std::size_t n_rows = 0;
    std::size_t dropped_dates = 0;
    std::vector<std::string> regions;
    std::vector<std::string> warnings;
    classify::LogisticModel logistic;
    classify::ForestModel forest;

    /// `model,auc,n_train,n_test,seed`.
    std::string to_csv() const;
};

/// Joins weather onto the daily increments of every selected confirmed series
/// with a latitude, labels by per-region median, splits 70/30 stratified and
/// scores both classifiers plus single-feature ablations on the test split.
ClassifyReport classify_regions(const std::vector<RegionSeries> &cumulative,
                                const std::vector<WeatherRecord> &weather, const NameMap &name_map,
                                const RunConfig &config);

ClassifyReport run_classification(const RunConfig &config);

enum class PaperCase { table2, table3_prophet, table3_auc };

PaperCase parse_paper_case(std::string_view text);

struct ComparisonRow {
    std::string label;
    std::string region;
    std::string metric; // "rmse" or "auc"
    std::optional<double> ours;
    std::optional<double> published;
    std::string detail;   // selected model, fold info, or the failure reason

    /// (ours - published) / published when both exist.
    std::optional<double> relative_deviation() const;
};

struct Comparison {
    PaperCase which = PaperCase::table2;
    std::vector<ComparisonRow> rows;
    std::vector<std::string> warnings;

    std::string to_text() const;
};

/// Archive layout expected by `reproduce`.
struct ArchiveFiles {
    std::filesystem::path confirmed; // time_series_covid19_confirmed_US.csv
    std::filesystem::path deaths;    // time_series_covid19_deaths_US.csv
    std::filesystem::path weather;   // weather.csv (region,date,temp_avg_c)
    std::filesystem::path name_map;  // name_map.csv (case_region,weather_region)

    static ArchiveFiles in(const std::filesystem::path &dir);
};

inline constexpr const char *kLosAngeles = "Los Angeles, California, US";
inline constexpr const char *kNewYork = "New York, New York, US";

/// Runs a documented recipe against the archived 2020 series and lines our
/// numbers up against the published ones. Never asserts equality. Throws
/// IoError with fetch instructions when the archive is missing.
Comparison reproduce(PaperCase which, const std::filesystem::path &archive_dir, unsigned jobs = 1,
                     std::uint64_t seed = 42);

/// Same recipes on already-parsed inputs.
Comparison reproduce_table2(const std::vector<RegionSeries> &confirmed);
Comparison reproduce_table3_prophet(const std::vector<RegionSeries> &confirmed);
Comparison reproduce_table3_auc(const std::vector<RegionSeries> &confirmed, const std::vector<WeatherRecord> &weather,
                                const NameMap &name_map, std::uint64_t seed, unsigned jobs);

} // namespace epicast
