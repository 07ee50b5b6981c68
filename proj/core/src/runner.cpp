#include "epicast/runner.hpp"

#include "epicast/additive.hpp"
#include "epicast/arima.hpp"
#include "epicast/csv.hpp"
#include "epicast/errors.hpp"
#include "epicast/ets.hpp"
#include "epicast/plot.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace epicast {

namespace {

std::string slug(std::string_view text) {
    std::string out;
    for (char c : csv::to_lower(text)) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (keep) {
            out.push_back(c);
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') {
        out.pop_back();
    }
    return out.empty() ? "region" : out;
}

std::string metric_text(const ReportRow &row, double value) {
    return row.ok && row.eval.n > 0 ? csv::format_number(value) : std::string{};
}

// Regions in first-appearance order, optionally filtered by display name.
std::vector<RegionKey> select_regions(const std::vector<RegionSeries> &series, const std::vector<std::string> &filters,
                                      std::vector<std::string> &warnings) {
    std::vector<RegionKey> all;
    for (const auto &s : series) {
        const bool seen = std::any_of(all.begin(), all.end(), [&](const RegionKey &k) { return k == s.key; });
        if (!seen) {
            all.push_back(s.key);
        }
    }
    if (filters.empty()) {
        return all;
    }
    std::vector<RegionKey> out;
    for (const auto &filter : filters) {
        const std::string wanted = csv::to_lower(csv::trim(filter));
        const auto it = std::find_if(all.begin(), all.end(), [&](const RegionKey &k) { return k.normalized() == wanted; });
        if (it == all.end()) {
            warnings.push_back("region filter '" + filter + "' matched no series");
            continue;
        }
        const bool dup = std::any_of(out.begin(), out.end(), [&](const RegionKey &k) { return k == *it; });
        if (!dup) {
            out.push_back(*it);
        }
    }
    return out;
}

const RegionSeries *find_series(const std::vector<RegionSeries> &series, const RegionKey &key, Measure measure) {
    for (const auto &s : series) {
        if (s.measure == measure && s.key == key) {
            return &s;
        }
    }
    return nullptr;
}

struct TaskResult {
    std::vector<ReportRow> rows;
};

TaskResult forecast_task(const RegionKey &key, Measure measure, const std::vector<RegionSeries> &series,
                         const RunConfig &config) {
    TaskResult out;
    const std::string region = key.display_name();
    const std::uint64_t seed = region_seed(config.seed, key);
    const auto fail_all = [&](const std::string &reason) {
        for (ModelKind m : config.models) {
            ReportRow row;
            row.region = region;
            row.measure = measure;
            row.model = m;
            row.error = reason;
            row.seed = seed;
            out.rows.push_back(std::move(row));
        }
    };

    const RegionSeries *source = find_series(series, key, measure);
    if (source == nullptr) {
        fail_all("no " + std::string(to_string(measure)) + " series for this region");
        return out;
    }
    RegionSeries base = config.model_series == SeriesKind::daily ? to_daily(*source) : *source;
    if (config.holdout_days >= base.size()) {
        fail_all("series of " + std::to_string(base.size()) + " days is too short for a " +
                 std::to_string(config.holdout_days) + "-day holdout");
        return out;
    }
    const auto [train, test] = split_train_test(base, config.holdout_days);
    const std::size_t h = config.holdout_days + config.horizon;
    const Date first = add_days(train.end_date(), 1);

    const auto wants = [&](ModelKind m) {
        return std::find(config.models.begin(), config.models.end(), m) != config.models.end();
    };
    const bool need_arima = wants(ModelKind::arima) || wants(ModelKind::average);
    const bool need_ets = wants(ModelKind::ets) || wants(ModelKind::average);

    std::map<ModelKind, ReportRow> done;
    const auto attempt = [&](ModelKind kind, const std::function<void(ReportRow &)> &body) {
        ReportRow row;
        row.region = region;
        row.measure = measure;
        row.model = kind;
        row.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body(row);
            if (config.holdout_days > 0) {
                row.eval = evaluate(test.values, std::span<const double>(row.forecast.point).first(config.holdout_days));
            }
            row.ok = true;
        } catch (const std::exception &err) {
            row.ok = false;
            row.error = err.what();
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        done[kind] = std::move(row);
    };

    if (need_arima) {
        attempt(ModelKind::arima, [&](ReportRow &row) {
            arima::AutoOptions options;
            options.seasonal = config.arima_seasonal;
            options.period = config.seasonal_period;
            const auto fit = arima::auto_fit(train.values, options);
            row.selected = "ARIMA" + fit.best.order.to_string();
            row.forecast = arima::forecast(fit.best, train.values, h, first);
        });
    }
    if (need_ets) {
        attempt(ModelKind::ets, [&](ReportRow &row) {
            const auto fit = ets::auto_fit(train.values, config.seasonal_period);
            row.selected = fit.best.spec.to_string();
            row.forecast = ets::forecast(fit.best, h, first);
        });
    }
    if (wants(ModelKind::additive)) {
        attempt(ModelKind::additive, [&](ReportRow &row) {
            const auto dates = train.dates();
            auto cfg = config.additive;
            const auto fit = additive::fit(dates, train.values, cfg);
            std::vector<Date> future;
            for (std::size_t i = 0; i < h; ++i) {
                future.push_back(add_days(first, static_cast<long long>(i)));
            }
            row.selected = "additive(cp=" + std::to_string(fit.layout.changepoints.size()) +
                           ",weekly=" + std::to_string(fit.layout.weekly_order) +
                           ",yearly=" + std::to_string(fit.layout.yearly_order) + ")";
            row.forecast = additive::predict(fit, future);
        });
    }
    if (wants(ModelKind::average)) {
        const auto &a = done[ModelKind::arima];
        const auto &e = done[ModelKind::ets];
        if (a.ok && e.ok) {
            attempt(ModelKind::average, [&](ReportRow &row) {
                row.selected = a.selected + "+" + e.selected;
                row.forecast = average_forecasts(a.forecast, e.forecast);
            });
        } else {
            ReportRow row;
            row.region = region;
            row.measure = measure;
            row.model = ModelKind::average;
            row.seed = seed;
            row.error = "average needs both arima and ets; component failed: " +
                        std::string(!a.ok ? "arima (" + a.error + ")" : "ets (" + e.error + ")");
            done[ModelKind::average] = std::move(row);
        }
    }
    for (ModelKind m : config.models) {
        out.rows.push_back(done[m]);
    }
    return out;
}

} // namespace

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)> &fn) {
    const auto workers_wanted = std::min<std::size_t>(std::max(1u, jobs), n);
    if (workers_wanted <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < workers_wanted; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        const std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::uint64_t region_hash(const RegionKey &key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : key.normalized()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t region_seed(std::uint64_t global_seed, const RegionKey &key) { return global_seed ^ region_hash(key); }

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::string RunReport::to_csv() const {
    std::string out = eval_csv_header() + ",selected,error\n";
    for (const auto &row : rows) {
        out += csv::join_row({std::string(to_string(row.model)), row.region, std::string(to_string(row.measure)),
                              metric_text(row, row.eval.rmse), metric_text(row, row.eval.me),
                              metric_text(row, row.eval.mae), row.ok ? std::to_string(row.eval.n) : std::string{},
                              row.selected, row.error});
        out += "\n";
    }
    return out;
}

std::string RunReport::to_json() const {
    nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
    for (const auto &row : rows) {
        nlohmann::ordered_json r{{"model", to_string(row.model)},
                                 {"region", row.region},
                                 {"measure", to_string(row.measure)},
                                 {"ok", row.ok},
                                 {"selected", row.selected},
                                 {"seed", row.seed}};
        if (row.ok && row.eval.n > 0) {
            r["rmse"] = row.eval.rmse;
            r["me"] = row.eval.me;
            r["mae"] = row.eval.mae;
            r["n"] = row.eval.n;
        }
        if (!row.ok) {
            r["error"] = row.error;
        }
        rows_json.push_back(std::move(r));
    }
    const nlohmann::ordered_json j{{"rows", rows_json}, {"warnings", warnings}};
    return j.dump(2) + "\n";
}

std::string RunReport::timings_csv() const {
    std::string out = "model,region,measure,wall_ms\n";
    for (const auto &row : rows) {
        out += csv::join_row({std::string(to_string(row.model)), row.region, std::string(to_string(row.measure)),
                              csv::format_number(row.wall_ms)});
        out += "\n";
    }
    return out;
}

bool RunReport::all_failed() const {
    return !rows.empty() && std::none_of(rows.begin(), rows.end(), [](const ReportRow &r) { return r.ok; });
}

RunInputs load_inputs(const RunConfig &config) {
    config.validate();
    RunInputs inputs;
    const ParseOptions options{config.lenient};
    const auto load = [&](const std::filesystem::path &path, Measure measure) {
        auto parsed = parse_wide_csv(read_file(path), measure, options);
        for (auto &issue : parsed.skipped) {
            inputs.skipped.push_back(std::move(issue));
        }
        for (auto &s : parsed.series) {
            auto repaired = repair_cumulative(s);
            inputs.repairs += repaired.changes;
            inputs.series.push_back(std::move(repaired.value));
        }
    };
    const auto wants = [&](Measure m) {
        return std::find(config.measures.begin(), config.measures.end(), m) != config.measures.end();
    };
    if (config.cases.empty()) {
        throw ConfigError("a cases file is required");
    }
    if (wants(Measure::deaths) && config.deaths.empty()) {
        throw ConfigError("deaths were requested but no deaths file is configured");
    }
    if (wants(Measure::recovered)) {
        throw ConfigError("recovered series are not modelled");
    }
    load(config.cases, Measure::confirmed);
    if (wants(Measure::deaths)) {
        load(config.deaths, Measure::deaths);
    }
    return inputs;
}

RunReport run_forecasts(const std::vector<RegionSeries> &series, const RunConfig &config) {
    config.validate();
    RunReport report;
    const auto regions = select_regions(series, config.regions, report.warnings);
    if (regions.empty()) {
        throw ConfigError("no region matched the configured filters");
    }

    struct Task {
        std::size_t region;
        Measure measure;
    };
    std::vector<Task> tasks;
    for (std::size_t r = 0; r < regions.size(); ++r) {
        for (Measure m : config.measures) {
            tasks.push_back({r, m});
        }
    }
    std::vector<TaskResult> results(tasks.size());
    parallel_for(tasks.size(), config.jobs, [&](std::size_t i) {
        results[i] = forecast_task(regions[tasks[i].region], tasks[i].measure, series, config);
    });

    // Deterministic key order: region name, then measure, then the requested model order.
    std::vector<std::size_t> order(tasks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ka = regions[tasks[a].region].normalized();
        const auto kb = regions[tasks[b].region].normalized();
        if (ka != kb) {
            return ka < kb;
        }
        return tasks[a].measure < tasks[b].measure;
    });
    for (std::size_t i : order) {
        for (auto &row : results[i].rows) {
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

void write_outputs(const RunReport &report, const std::vector<RegionSeries> &series, const RunConfig &config) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.output / "forecasts", ec);
    if (config.write_plots) {
        fs::create_directories(config.output / "plots", ec);
    }
    if (ec) {
        throw IoError("cannot create output directory " + config.output.string() + ": " + ec.message());
    }
    write_file(config.output / "report.csv", report.to_csv());
    write_file(config.output / "report.json", report.to_json());
    write_file(config.output / "timings.csv", report.timings_csv());

    for (const auto &row : report.rows) {
        if (!row.ok) {
            continue;
        }
        const std::string stem = slug(row.region) + "__" + std::string(to_string(row.measure)) + "__" +
                                 std::string(to_string(row.model));
        write_file(config.output / "forecasts" / (stem + ".csv"), forecast_to_csv(row.forecast));
        if (!config.write_plots) {
            continue;
        }
        const RegionSeries *actual = nullptr;
        for (const auto &s : series) {
            if (s.measure == row.measure && s.key.display_name() == row.region) {
                actual = &s;
                break;
            }
        }
        if (actual != nullptr) {
            const RegionSeries shown = config.model_series == SeriesKind::daily ? to_daily(*actual) : *actual;
            plot::emit_plot(shown, row.forecast, config.output / "plots" / (stem + ".svg"),
                            row.region + " " + std::string(to_string(row.measure)) + " - " + row.selected);
        }
    }
}

RunReport run(const RunConfig &config) {
    const RunInputs inputs = load_inputs(config);
    RunReport report = run_forecasts(inputs.series, config);
    if (inputs.repairs > 0) {
        report.warnings.push_back("repaired " + std::to_string(inputs.repairs) +
                                  " decreasing cumulative values (running max)");
    }
    for (const auto &issue : inputs.skipped) {
        report.warnings.push_back("skipped row " + std::to_string(issue.row) + ": " + issue.message);
    }
    write_outputs(report, inputs.series, config);
    return report;
}

std::string ClassifyReport::to_csv() const {
    std::string out = "model,auc,n_train,n_test,seed\n";
    for (const auto &r : rows) {
        out += csv::join_row({r.model, csv::format_number(r.auc), std::to_string(r.n_train), std::to_string(r.n_test),
                              std::to_string(r.seed)});
        out += "\n";
    }
    return out;
}

ClassifyReport classify_regions(const std::vector<RegionSeries> &cumulative, const std::vector<WeatherRecord> &weather,
                                const NameMap &name_map, const RunConfig &config) {
    ClassifyReport report;
    std::vector<RegionSeries> candidates;
    for (const auto &s : cumulative) {
        if (s.measure == Measure::confirmed) {
            candidates.push_back(s);
        }
    }
    std::vector<RegionKey> keys;
    if (config.regions.empty()) {
        for (const auto &s : candidates) {
            if (name_map.contains(s.key)) {
                keys.push_back(s.key);
            }
        }
    } else {
        keys = select_regions(candidates, config.regions, report.warnings);
    }

    std::vector<std::vector<JoinedRow>> per_region;
    for (const auto &key : keys) {
        const RegionSeries *s = find_series(candidates, key, Measure::confirmed);
        if (!s->key.latitude) {
            report.warnings.push_back("excluded '" + key.display_name() + "': latitude missing");
            continue;
        }
        const auto joined = join_weather(to_daily(*s), weather, name_map);
        report.dropped_dates += joined.dropped;
        if (joined.rows.empty()) {
            report.warnings.push_back("no weather overlap for '" + key.display_name() + "'");
            continue;
        }
        report.regions.push_back(key.display_name());
        per_region.push_back(joined.rows);
    }
    if (per_region.empty()) {
        throw ConfigError("no region could be joined with weather data");
    }

    const classify::LabeledTable table = classify::build_labels(per_region);
    report.n_rows = table.rows();
    report.positive_rate = static_cast<double>(std::count(table.labels.begin(), table.labels.end(), 1)) /
                           static_cast<double>(table.rows());
    const auto split = classify::stratified_split(table.labels, config.train_fraction, config.seed);

    const auto train_test = [&](const classify::LabeledTable &t) {
        const auto tr = t.subset(split.train);
        const auto te = t.subset(split.test);
        return std::pair{classify::make_table(tr.features, tr.labels, tr.feature_names), te};
    };
    classify::ForestOptions forest_options;
    forest_options.n_trees = config.n_trees;
    forest_options.max_depth = config.max_depth;
    forest_options.mtry = config.mtry;
    forest_options.min_leaf = config.min_leaf;
    forest_options.seed = config.seed;
    forest_options.jobs = config.jobs;

    const auto score = [&](const classify::LabeledTable &t, const std::string &suffix, bool keep_models) {
        const auto [train, test] = train_test(t);
        const auto logistic = classify::fit_logistic(train);
        const auto forest = classify::fit_forest(train, forest_options);
        report.rows.push_back({"logistic" + suffix, classify::auc(classify::predict_proba(logistic, test.features), test.labels),
                               train.rows(), test.rows(), config.seed});
        report.rows.push_back({"random_forest" + suffix,
                               classify::auc(classify::predict_proba(forest, test.features), test.labels), train.rows(),
                               test.rows(), config.seed});
        if (keep_models) {
            report.logistic = logistic;
            report.forest = forest;
        }
    };
    score(table, "", true);
    for (std::size_t c = 0; c < table.cols(); ++c) {
        const std::size_t column[] = {c};
        score(table.select_columns(column), "[" + table.feature_names[c] + "]", false);
    }
    return report;
}

ClassifyReport run_classification(const RunConfig &config) {
    config.validate();
    if (config.weather.empty() || config.name_map.empty()) {
        throw ConfigError("classification needs both 'weather' and 'name_map' files");
    }
    RunConfig cases_only = config;
    cases_only.measures = {Measure::confirmed};
    const RunInputs inputs = load_inputs(cases_only);
    const auto weather = parse_weather_csv(read_file(config.weather));
    const auto name_map = NameMap::parse(read_file(config.name_map));
    ClassifyReport report = classify_regions(inputs.series, weather, name_map, config);

    std::error_code ec;
    std::filesystem::create_directories(config.output, ec);
    if (ec) {
        throw IoError("cannot create output directory " + config.output.string() + ": " + ec.message());
    }
    write_file(config.output / "classify.csv", report.to_csv());
    write_file(config.output / "logistic.json", classify::to_json(report.logistic) + "\n");
    write_file(config.output / "forest.json", classify::to_json(report.forest) + "\n");
    return report;
}

} // namespace epicast
